from __future__ import annotations

import threading

import pytest
from fastapi.testclient import TestClient

from conftest import make_node, make_tree
from ui_miner.annotation import create_app
from ui_miner.device import ScreenCapture
from ui_miner.hierarchy import serialize_hierarchy
from ui_miner.store import DatasetStore


def tree_with_leaves(count: int):
    children = tuple(
        make_node("android.widget.Button", rid=f"b{j}", bounds=(0, j * 100, 90, j * 100 + 90), clickable=True)
        for j in range(count)
    )
    return make_tree(
        make_node("android.widget.FrameLayout", bounds=(0, 0, 1080, 1920), children=children)
    )


def ingest(store: DatasetStore, tree, ts: int, app_id: str = "app"):
    return store.ingest_capture(
        ScreenCapture(
            tree=tree,
            screenshot=b"\x89PNG fake",
            activity_name="app/Main",
            captured_at=ts,
            app_id=app_id,
            raw_dump=serialize_hierarchy(tree),
        )
    )


@pytest.fixture
def store(tmp_path):
    return DatasetStore(tmp_path)


@pytest.fixture
def client(store):
    return TestClient(create_app(store, clock=lambda: 1000))


def valid_body(**overrides):
    body = {"verdict": "valid", "reasons": [], "other_text": "", "annotator_id": "ann1"}
    body.update(overrides)
    return body


class TestListUis:
    def test_empty_store(self, client):
        data = client.get("/uis").json()
        assert data == {"items": [], "next_cursor": None}

    def test_boxes_match_leaf_counts(self, store, client):
        # Leaf counts per fixture are the construction parameter itself.
        expected = {}
        for i, leaves in enumerate([1, 3, 5, 2, 4]):
            record = ingest(store, tree_with_leaves(leaves), ts=i)
            expected[record.record_id] = leaves
        data = client.get("/uis", params={"limit": 10}).json()
        assert len(data["items"]) == 5
        for item in data["items"]:
            assert len(item["boxes"]) == expected[item["record_id"]]
            assert item["screen"] == {"width": 1080, "height": 1920}
            assert item["screenshot_url"].startswith("/blobs/")

    def test_pagination_enumerates_exactly_once(self, store, client):
        ids = {ingest(store, tree_with_leaves(i + 1), ts=i).record_id for i in range(7)}
        seen = []
        cursor = ""
        while True:
            params = {"limit": 2}
            if cursor:
                params["cursor"] = cursor
            data = client.get("/uis", params=params).json()
            seen.extend(item["record_id"] for item in data["items"])
            if not data["next_cursor"]:
                break
            cursor = data["next_cursor"]
        assert len(seen) == len(set(seen)) == 7
        assert set(seen) == ids

    def test_limit_page_has_cursor(self, store, client):
        for i in range(3):
            ingest(store, tree_with_leaves(i + 1), ts=i)
        data = client.get("/uis", params={"limit": 2}).json()
        assert len(data["items"]) == 2
        assert data["next_cursor"] == data["items"][-1]["record_id"]

    def test_unknown_cursor_rejected(self, client):
        assert client.get("/uis", params={"cursor": "nope"}).status_code == 422

    def test_decided_records_leave_pending_queue(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        client.post(f"/uis/{record.record_id}/decision", json=valid_body())
        assert client.get("/uis").json()["items"] == []


class TestDecisions:
    def test_valid_decision_validates_record(self, store, client):
        record = ingest(store, tree_with_leaves(2), ts=0)
        resp = client.post(f"/uis/{record.record_id}/decision", json=valid_body())
        assert resp.status_code == 200
        stored = store.get_record(record.record_id)
        assert stored.status == "validated"
        assert stored.flags == []
        assert stored.annotator_id == "ann1"
        assert stored.decided_at == 1000

    def test_invalid_decision_attaches_human_flags(self, store, client):
        record = ingest(store, tree_with_leaves(2), ts=0)
        resp = client.post(
            f"/uis/{record.record_id}/decision",
            json=valid_body(verdict="invalid", reasons=["duplicate_ui"]),
        )
        assert resp.status_code == 200
        stored = store.get_record(record.record_id)
        assert stored.status == "flagged"
        assert [f.kind for f in stored.flags] == ["duplicate"]
        assert stored.flags[0].source == "human"

    def test_other_reason_carries_free_text(self, store, client):
        record = ingest(store, tree_with_leaves(2), ts=0)
        client.post(
            f"/uis/{record.record_id}/decision",
            json=valid_body(verdict="invalid", reasons=["other"], other_text="blurred"),
        )
        stored = store.get_record(record.record_id)
        assert stored.flags[0].kind == "other"
        assert stored.flags[0].detail == "blurred"

    def test_valid_with_reasons_is_422(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        resp = client.post(
            f"/uis/{record.record_id}/decision",
            json=valid_body(reasons=["duplicate_ui"]),
        )
        assert resp.status_code == 422

    def test_invalid_without_reasons_is_422(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        resp = client.post(
            f"/uis/{record.record_id}/decision", json=valid_body(verdict="invalid")
        )
        assert resp.status_code == 422

    def test_other_requires_text(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        resp = client.post(
            f"/uis/{record.record_id}/decision",
            json=valid_body(verdict="invalid", reasons=["other"]),
        )
        assert resp.status_code == 422

    def test_unknown_record_404(self, client):
        assert client.post("/uis/ghost/decision", json=valid_body()).status_code == 404

    def test_second_decision_409(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        first = client.post(f"/uis/{record.record_id}/decision", json=valid_body())
        second = client.post(
            f"/uis/{record.record_id}/decision",
            json=valid_body(verdict="invalid", reasons=["duplicate_ui"]),
        )
        assert first.status_code == 200
        assert second.status_code == 409
        assert store.get_record(record.record_id).status == "validated"

    def test_concurrent_submitters_get_one_200_one_409(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        statuses = []
        barrier = threading.Barrier(2)

        def submit():
            barrier.wait()
            resp = client.post(f"/uis/{record.record_id}/decision", json=valid_body())
            statuses.append(resp.status_code)

        threads = [threading.Thread(target=submit) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(statuses) == [200, 409]


class TestAuditSample:
    def _decide_n(self, store, client, n: int) -> None:
        for i in range(n):
            record = ingest(store, tree_with_leaves((i % 9) + 1), ts=i)
            client.post(f"/uis/{record.record_id}/decision", json=valid_body())

    def test_five_percent_of_hundred(self, store, client):
        self._decide_n(store, client, 100)
        data = client.get("/audit/sample", params={"fraction": 0.05, "seed": 3}).json()
        assert data["count"] == 5
        assert len(data["records"]) == 5

    def test_full_fraction_returns_all(self, store, client):
        self._decide_n(store, client, 10)
        data = client.get("/audit/sample", params={"fraction": 1.0, "seed": 0}).json()
        assert data["count"] == 10
        assert len(set(data["records"])) == 10

    def test_deterministic_for_seed(self, store, client):
        self._decide_n(store, client, 40)
        a = client.get("/audit/sample", params={"fraction": 0.25, "seed": 9}).json()
        b = client.get("/audit/sample", params={"fraction": 0.25, "seed": 9}).json()
        assert a == b

    def test_fraction_out_of_range_422(self, store, client):
        assert client.get("/audit/sample", params={"fraction": 0}).status_code == 422
        assert client.get("/audit/sample", params={"fraction": 1.5}).status_code == 422


class TestBlobs:
    def test_screenshot_served(self, store, client):
        record = ingest(store, tree_with_leaves(1), ts=0)
        resp = client.get(f"/blobs/{record.screenshot_path}")
        assert resp.status_code == 200
        assert resp.content == b"\x89PNG fake"

    def test_traversal_blocked(self, store, client):
        assert client.get("/blobs/../../etc/passwd").status_code == 404
