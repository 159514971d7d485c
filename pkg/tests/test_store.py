from __future__ import annotations

import threading

import pytest
from hypothesis import given, settings

from conftest import make_node, make_tree, view_trees
from ui_miner.device import ScreenCapture
from ui_miner.hierarchy import ViewTree, serialize_hierarchy
from ui_miner.layout import (
    BACKGROUND,
    NONTEXT,
    TEXT,
    LayoutImage,
    layout_distance,
    layout_to_png,
    render_layout,
)
from ui_miner.noise import NoiseFlag
from ui_miner.store import (
    AppMeta,
    DatasetStore,
    InsufficientCorpus,
    NotFound,
    load_ingest_manifest,
)


def capture_for(tree: ViewTree, app_id: str = "app", ts: int = 0) -> ScreenCapture:
    return ScreenCapture(
        tree=tree,
        screenshot=b"\x89PNG fake",
        activity_name=f"{app_id}/Main",
        captured_at=ts,
        app_id=app_id,
        raw_dump=serialize_hierarchy(tree),
    )


def distinct_tree(i: int) -> ViewTree:
    children = tuple(
        make_node("android.widget.TextView", bounds=(0, j * 100, 80, j * 100 + 80))
        for j in range(i + 1)
    )
    return make_tree(
        make_node("android.widget.FrameLayout", bounds=(0, 0, 1080, 1920), children=children)
    )


# ---------------------------------------------------------------------------
# Layout rendering


def brute_force_layout(tree: ViewTree, grid_w: int, grid_h: int) -> LayoutImage:
    """1-px rasterize then downsample; independent of the production path."""
    leaves = [n for n in tree.iter_nodes() if not n.children]
    cells = bytearray(grid_w * grid_h)
    winners = [[-1] * grid_w for _ in range(grid_h)]
    for leaf in leaves:
        textual = "Text" in leaf.widget_class or leaf.text != ""
        value = TEXT if textual else NONTEXT
        for px in range(max(0, leaf.bounds.left), min(tree.screen_width, leaf.bounds.right)):
            cx = px * grid_w // tree.screen_width
            for py in range(max(0, leaf.bounds.top), min(tree.screen_height, leaf.bounds.bottom)):
                cy = py * grid_h // tree.screen_height
                if leaf.draw_index >= winners[cy][cx]:
                    winners[cy][cx] = leaf.draw_index
                    cells[cy * grid_w + cx] = value
    return LayoutImage(width=grid_w, height=grid_h, cells=bytes(cells))


class TestRenderLayout:
    def test_zero_area_leaves_give_all_background(self):
        tree = make_tree(make_node("android.widget.FrameLayout", bounds=(5, 5, 5, 5)))
        layout = render_layout(tree, 8, 8)
        assert set(layout.cells) == {BACKGROUND}

    def test_fullscreen_textview_gives_all_text(self):
        tree = make_tree(
            make_node("android.widget.TextView", text="big", bounds=(0, 0, 1080, 1920))
        )
        layout = render_layout(tree, 8, 8)
        assert set(layout.cells) == {TEXT}

    def test_button_over_text_pane_matches_brute_force(self):
        pane = make_node("android.widget.TextView", text="prose", bounds=(0, 0, 100, 180))
        button = make_node("android.widget.Button", bounds=(20, 60, 80, 120), clickable=True)
        tree = make_tree(
            make_node("android.widget.FrameLayout", bounds=(0, 0, 100, 180), children=(pane, button)),
            w=100,
            h=180,
        )
        produced = render_layout(tree, 10, 18)
        oracle = brute_force_layout(tree, 10, 18)
        assert produced == oracle
        # The later-drawn button must have painted nontext over the pane.
        assert NONTEXT in produced.cells and TEXT in produced.cells

    @given(view_trees())
    @settings(max_examples=60)
    def test_matches_brute_force_on_generated_trees(self, tree):
        small = ViewTree(
            root=tree.root,
            screen_width=min(tree.screen_width, 60),
            screen_height=min(tree.screen_height, 60),
        )
        assert render_layout(small, 7, 9) == brute_force_layout(small, 7, 9)

    def test_scale_covariance(self):
        def scaled(factor: int) -> ViewTree:
            pane = make_node("android.widget.TextView", text="x", bounds=(0, 0, 50 * factor, 40 * factor))
            badge = make_node(
                "android.widget.ImageView", bounds=(10 * factor, 5 * factor, 30 * factor, 25 * factor)
            )
            return make_tree(
                make_node(
                    "android.widget.FrameLayout",
                    bounds=(0, 0, 100 * factor, 80 * factor),
                    children=(pane, badge),
                ),
                w=100 * factor,
                h=80 * factor,
            )

        assert render_layout(scaled(1), 10, 8) == render_layout(scaled(7), 10, 8)

    def test_grid_dimensions_validated(self):
        with pytest.raises(ValueError):
            render_layout(distinct_tree(0), 0, 10)


class TestLayoutDistance:
    def test_identity_and_symmetry(self):
        a = render_layout(distinct_tree(1))
        b = render_layout(distinct_tree(3))
        assert layout_distance(a, a) == 0.0
        assert layout_distance(a, b) == layout_distance(b, a)

    def test_triangle_inequality_on_samples(self):
        layouts = [render_layout(distinct_tree(i)) for i in range(5)]
        for x in layouts:
            for y in layouts:
                for z in layouts:
                    assert layout_distance(x, z) <= layout_distance(x, y) + layout_distance(y, z) + 1e-12

    def test_size_mismatch_rejected(self):
        a = render_layout(distinct_tree(0), 4, 4)
        b = render_layout(distinct_tree(0), 5, 5)
        with pytest.raises(ValueError):
            layout_distance(a, b)

    def test_png_encoding_smoke(self):
        png = layout_to_png(render_layout(distinct_tree(2)), 112, 200)
        assert png.startswith(b"\x89PNG")


# ---------------------------------------------------------------------------
# Store


class TestStoreCrud:
    def test_put_then_get_roundtrips(self, tmp_path):
        store = DatasetStore(tmp_path)
        record = store.ingest_capture(capture_for(distinct_tree(0), ts=5))
        record.flags.append(NoiseFlag(kind="other", detail="note", source="auto"))
        store.put_record(record)
        fetched = store.get_record(record.record_id)
        assert fetched.to_dict() == record.to_dict()

    def test_get_unknown_raises(self, tmp_path):
        with pytest.raises(NotFound):
            DatasetStore(tmp_path).get_record("missing")

    def test_list_filters_by_status(self, tmp_path):
        # 20-record fixture store; records 0..7 validated by the manifest.
        store = DatasetStore(tmp_path)
        validated_ids = set()
        for i in range(20):
            record = store.ingest_capture(capture_for(distinct_tree(i), ts=i))
            if i < 8:
                store.apply_decision(record.record_id, "valid", [], "ann", decided_at=1)
                validated_ids.add(record.record_id)
        found = store.list_records(status="validated")
        assert {r.record_id for r in found} == validated_ids
        assert len(found) == 8

    def test_listing_stable_order(self, tmp_path):
        store = DatasetStore(tmp_path)
        store.ingest_capture(capture_for(distinct_tree(0), app_id="b", ts=2))
        store.ingest_capture(capture_for(distinct_tree(1), app_id="a", ts=9))
        store.ingest_capture(capture_for(distinct_tree(2), app_id="a", ts=1))
        ordered = [(r.app_id, r.captured_at) for r in store.list_records()]
        assert ordered == [("a", 1), ("a", 9), ("b", 2)]

    def test_content_addressed_reingest(self, tmp_path):
        store = DatasetStore(tmp_path)
        capture = capture_for(distinct_tree(0), ts=77)
        first = store.ingest_capture(capture)
        second = store.ingest_capture(capture)
        assert first.record_id == second.record_id
        assert len(store.list_records()) == 1

    def test_blobs_written_and_served_back(self, tmp_path):
        store = DatasetStore(tmp_path)
        record = store.ingest_capture(capture_for(distinct_tree(0)))
        assert store.blob_path(record.screenshot_path).read_bytes() == b"\x89PNG fake"
        assert "<hierarchy" in store.blob_path(record.dump_path).read_text(encoding="utf-8")

    def test_reload_from_disk(self, tmp_path):
        store = DatasetStore(tmp_path)
        record = store.ingest_capture(capture_for(distinct_tree(3), ts=4))
        store.apply_decision(
            record.record_id,
            "invalid",
            [NoiseFlag(kind="duplicate", detail="x", source="human")],
            "ann1",
            decided_at=9,
        )
        reloaded = DatasetStore(tmp_path)
        fetched = reloaded.get_record(record.record_id)
        assert fetched.status == "flagged"
        assert fetched.flags == [NoiseFlag(kind="duplicate", detail="x", source="human")]
        assert fetched.annotator_id == "ann1"
        tree = reloaded.load_tree(fetched)
        assert tree.node_count() == distinct_tree(3).node_count()

    def test_decision_cas_single_winner(self, tmp_path):
        store = DatasetStore(tmp_path)
        record = store.ingest_capture(capture_for(distinct_tree(0)))
        results = []

        def decide(verdict):
            results.append(store.apply_decision(record.record_id, verdict, [], "a", 0))

        threads = [threading.Thread(target=decide, args=("valid",)) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == [False, True]

    def test_ingest_manifest_categories(self, tmp_path):
        manifest_path = tmp_path / "manifest.json"
        manifest_path.write_text(
            '{"app": {"category": "Finance", "rating": 4.4, "installs": 1000000}}',
            encoding="utf-8",
        )
        manifest = load_ingest_manifest(manifest_path)
        assert manifest["app"] == AppMeta(category="Finance", rating=4.4, installs=1_000_000)
        store = DatasetStore(tmp_path / "store")
        store.set_app_meta("app", manifest["app"])
        record = store.ingest_capture(capture_for(distinct_tree(0)))
        assert record.app_category == "Finance"


class TestRetrieveSimilar:
    def _populated(self, tmp_path) -> tuple[DatasetStore, list[str]]:
        store = DatasetStore(tmp_path)
        ids = []
        for i in range(9):
            record = store.ingest_capture(capture_for(distinct_tree(i), ts=i))
            store.apply_decision(record.record_id, "valid", [], "a", 0)
            ids.append(record.record_id)
        # Exact layout duplicate of record 0, captured later.
        dup = store.ingest_capture(capture_for(distinct_tree(0), ts=99))
        store.apply_decision(dup.record_id, "valid", [], "a", 0)
        ids.append(dup.record_id)
        return store, ids

    def test_exact_duplicate_ranks_first_at_zero(self, tmp_path):
        store, ids = self._populated(tmp_path)
        hits = store.retrieve_similar(ids[0], 3)
        assert hits[0][0].record_id == ids[9]
        assert hits[0][1] == 0.0

    def test_ranking_matches_brute_force(self, tmp_path):
        store, ids = self._populated(tmp_path)
        query = ids[4]
        query_layout = store.layout_of(store.get_record(query))
        scored = []
        for rid in ids:
            if rid == query:
                continue
            other = store.layout_of(store.get_record(rid))
            differing = sum(1 for x, y in zip(query_layout.cells, other.cells) if x != y)
            scored.append((differing / len(query_layout.cells), rid))
        scored.sort()
        expected = [rid for _, rid in scored]
        hits = store.retrieve_similar(query, 9)
        assert [r.record_id for r, _ in hits] == expected

    def test_insufficient_corpus(self, tmp_path):
        store = DatasetStore(tmp_path)
        ids = []
        for i in range(3):
            record = store.ingest_capture(capture_for(distinct_tree(i), ts=i))
            store.apply_decision(record.record_id, "valid", [], "a", 0)
            ids.append(record.record_id)
        with pytest.raises(InsufficientCorpus):
            store.retrieve_similar(ids[0], 5)

    def test_pending_query_rejected(self, tmp_path):
        store = DatasetStore(tmp_path)
        record = store.ingest_capture(capture_for(distinct_tree(0)))
        with pytest.raises(NotFound):
            store.retrieve_similar(record.record_id, 1)


class TestCorpusStats:
    def test_empty_store(self, tmp_path):
        stats = DatasetStore(tmp_path).corpus_stats()
        assert stats.total == 0
        assert stats.retention_fraction == 1.0

    def test_counts_match_construction(self, tmp_path):
        store = DatasetStore(tmp_path)
        store.set_app_meta("app_a", AppMeta(category="Games", rating=4.5, installs=10))
        store.set_app_meta("app_b", AppMeta(category="Tools", rating=3.5, installs=30))
        recs = []
        for i in range(6):
            app = "app_a" if i < 4 else "app_b"
            recs.append(store.ingest_capture(capture_for(distinct_tree(i), app_id=app, ts=i)))
        store.apply_decision(recs[0].record_id, "valid", [], "a", 0)
        store.apply_decision(
            recs[1].record_id,
            "invalid",
            [NoiseFlag(kind="overlaid", detail="", source="human")],
            "a",
            0,
        )
        recs[2].status = "auto_removed"
        store.put_record(recs[2])
        stats = store.corpus_stats()
        assert stats.total == 6
        assert stats.by_status["validated"] == 1
        assert stats.by_status["flagged"] == 1
        assert stats.by_status["auto_removed"] == 1
        assert stats.by_status["pending"] == 3
        assert stats.by_category == {"Games": 4, "Tools": 2}
        assert stats.by_app == {"app_a": 4, "app_b": 2}
        # kept = pending + validated = 4 of 6
        assert stats.retention_fraction == pytest.approx(4 / 6)
        assert stats.mean_rating == pytest.approx(4.0)
        assert "retention" in stats.to_table()
        assert stats.to_csv().splitlines()[0] == "section,key,value"
