"""Append-only JSONL dataset store with layout-similarity retrieval and stats."""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ui_miner.device import ScreenCapture
from ui_miner.hierarchy import ViewTree, parse_hierarchy
from ui_miner.layout import (
    DEFAULT_GRID_H,
    DEFAULT_GRID_W,
    LayoutImage,
    layout_distance,
    render_layout,
)
from ui_miner.noise import (
    DEFAULT_TYPE_TABLE,
    NoiseFlag,
    TypeIndexTable,
    structural_hash,
)


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class StorageFull(StoreError):
    pass


class InsufficientCorpus(StoreError):
    pass


STATUSES = ("pending", "auto_removed", "flagged", "validated")


@dataclass
class DatasetRecord:
    """One captured UI plus its curation state.

    record_id is content-addressed from the structural hash and the capture
    timestamp, so re-ingesting an identical capture lands on the same record.
    """

    record_id: str
    app_id: str
    app_category: str = ""
    activity_name: str = ""
    screenshot_path: str = ""
    dump_path: str = ""
    tree_digest: str = ""
    status: str = "pending"
    flags: list[NoiseFlag] = field(default_factory=list)
    annotator_id: str = ""
    captured_at: int = 0
    decided_at: int = 0
    screen_width: int = 0
    screen_height: int = 0
    stable: bool = True
    tree: Optional[ViewTree] = None  # in-memory only; paths are authoritative

    def require_tree(self) -> ViewTree:
        if self.tree is None:
            raise StoreError(f"record {self.record_id} has no tree loaded")
        return self.tree

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "app_id": self.app_id,
            "app_category": self.app_category,
            "activity_name": self.activity_name,
            "screenshot_path": self.screenshot_path,
            "dump_path": self.dump_path,
            "tree_digest": self.tree_digest,
            "status": self.status,
            "flags": [
                {"kind": f.kind, "detail": f.detail, "source": f.source} for f in self.flags
            ],
            "annotator_id": self.annotator_id,
            "captured_at": self.captured_at,
            "decided_at": self.decided_at,
            "screen_width": self.screen_width,
            "screen_height": self.screen_height,
            "stable": self.stable,
        }

    @staticmethod
    def from_dict(data: dict) -> "DatasetRecord":
        return DatasetRecord(
            record_id=data["record_id"],
            app_id=data["app_id"],
            app_category=data.get("app_category", ""),
            activity_name=data.get("activity_name", ""),
            screenshot_path=data.get("screenshot_path", ""),
            dump_path=data.get("dump_path", ""),
            tree_digest=data.get("tree_digest", ""),
            status=data.get("status", "pending"),
            flags=[
                NoiseFlag(
                    kind=f["kind"], detail=f.get("detail", ""), source=f.get("source", "auto")
                )
                for f in data.get("flags", [])
            ],
            annotator_id=data.get("annotator_id", ""),
            captured_at=data.get("captured_at", 0),
            decided_at=data.get("decided_at", 0),
            screen_width=data.get("screen_width", 0),
            screen_height=data.get("screen_height", 0),
            stable=data.get("stable", True),
        )


@dataclass(frozen=True)
class AppMeta:
    category: str = ""
    rating: float = 0.0
    installs: int = 0


def load_ingest_manifest(path: str | Path) -> dict[str, AppMeta]:
    """Read the optional app metadata manifest: app_id -> category/rating/installs."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return {
        app_id: AppMeta(
            category=meta.get("category", ""),
            rating=float(meta.get("rating", 0.0)),
            installs=int(meta.get("installs", 0)),
        )
        for app_id, meta in data.items()
    }


class DatasetStore:
    """One directory per app: records.jsonl (append-only, last line per id wins)
    plus blobs/ for screenshots and dumps."""

    def __init__(
        self,
        root: str | Path,
        grid_w: int = DEFAULT_GRID_W,
        grid_h: int = DEFAULT_GRID_H,
        table: TypeIndexTable = DEFAULT_TYPE_TABLE,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.grid_w = grid_w
        self.grid_h = grid_h
        self.table = table
        self._lock = threading.RLock()
        self._records: dict[str, DatasetRecord] = {}
        self._app_meta: dict[str, AppMeta] = {}
        self._load()

    # -- loading / persistence

    def _load(self) -> None:
        meta_path = self.root / "app_meta.json"
        if meta_path.exists():
            raw = json.loads(meta_path.read_text(encoding="utf-8"))
            self._app_meta = {
                app_id: AppMeta(
                    category=m.get("category", ""),
                    rating=float(m.get("rating", 0.0)),
                    installs=int(m.get("installs", 0)),
                )
                for app_id, m in raw.items()
            }
        for jsonl in sorted(self.root.glob("*/records.jsonl")):
            with open(jsonl, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = DatasetRecord.from_dict(json.loads(line))
                    self._records[record.record_id] = record

    def _app_dir(self, app_id: str) -> Path:
        d = self.root / app_id
        (d / "blobs").mkdir(parents=True, exist_ok=True)
        return d

    def _append(self, record: DatasetRecord) -> None:
        line = json.dumps(record.to_dict(), sort_keys=True)
        path = self._app_dir(record.app_id) / "records.jsonl"
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        except OSError as exc:
            raise StorageFull(f"cannot append to {path}: {exc}") from exc

    def set_app_meta(self, app_id: str, meta: AppMeta) -> None:
        with self._lock:
            self._app_meta[app_id] = meta
            doc = {
                a: {"category": m.category, "rating": m.rating, "installs": m.installs}
                for a, m in sorted(self._app_meta.items())
            }
            (self.root / "app_meta.json").write_text(
                json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8"
            )

    def app_meta(self, app_id: str) -> AppMeta:
        return self._app_meta.get(app_id, AppMeta())

    # -- record API

    def put_record(self, record: DatasetRecord) -> None:
        with self._lock:
            self._append(record)
            self._records[record.record_id] = record

    def get_record(self, record_id: str) -> DatasetRecord:
        with self._lock:
            record = self._records.get(record_id)
        if record is None:
            raise NotFound(f"no record {record_id!r}")
        return record

    def list_records(
        self,
        status: str | None = None,
        app_id: str | None = None,
        category: str | None = None,
    ) -> list[DatasetRecord]:
        with self._lock:
            records = list(self._records.values())
        if status is not None:
            records = [r for r in records if r.status == status]
        if app_id is not None:
            records = [r for r in records if r.app_id == app_id]
        if category is not None:
            records = [
                r
                for r in records
                if (r.app_category or self.app_meta(r.app_id).category) == category
            ]
        records.sort(key=lambda r: (r.app_id, r.captured_at, r.record_id))
        return records

    def ingest_capture(
        self,
        capture: ScreenCapture,
        category: str = "",
        stable: bool = True,
    ) -> DatasetRecord:
        """Persist a capture's blobs and create (or re-point at) its record."""
        digest = structural_hash(capture.tree, self.table)
        record_id = f"{digest}-{capture.captured_at}"
        with self._lock:
            existing = self._records.get(record_id)
            if existing is not None:
                if existing.tree is None:
                    existing.tree = capture.tree
                return existing
            app_dir = self._app_dir(capture.app_id)
            png_rel = f"{capture.app_id}/blobs/{record_id}.png"
            xml_rel = f"{capture.app_id}/blobs/{record_id}.xml"
            (app_dir / "blobs" / f"{record_id}.png").write_bytes(capture.screenshot)
            (app_dir / "blobs" / f"{record_id}.xml").write_text(
                capture.raw_dump, encoding="utf-8"
            )
            record = DatasetRecord(
                record_id=record_id,
                app_id=capture.app_id,
                app_category=category or self.app_meta(capture.app_id).category,
                activity_name=capture.activity_name,
                screenshot_path=png_rel,
                dump_path=xml_rel,
                tree_digest=digest,
                captured_at=capture.captured_at,
                screen_width=capture.tree.screen_width,
                screen_height=capture.tree.screen_height,
                stable=stable,
                tree=capture.tree,
            )
            self.put_record(record)
            return record

    def blob_path(self, rel: str) -> Path:
        return self.root / rel

    def load_tree(self, record: DatasetRecord) -> ViewTree:
        if record.tree is not None:
            return record.tree
        xml = (self.root / record.dump_path).read_text(encoding="utf-8")
        w = record.screen_width or 1080
        h = record.screen_height or 1920
        record.tree = parse_hierarchy(xml, w, h)
        return record.tree

    # -- decisions (used by the annotation service)

    def apply_decision(
        self,
        record_id: str,
        verdict: str,
        flags: Iterable[NoiseFlag],
        annotator_id: str,
        decided_at: int,
    ) -> bool:
        """Compare-and-set pending -> validated/flagged; False if already decided."""
        with self._lock:
            record = self._records.get(record_id)
            if record is None:
                raise NotFound(f"no record {record_id!r}")
            if record.status != "pending":
                return False
            record.status = "validated" if verdict == "valid" else "flagged"
            record.flags.extend(flags)
            record.annotator_id = annotator_id
            record.decided_at = decided_at
            self._append(record)
            return True

    # -- layout retrieval

    def layout_of(self, record: DatasetRecord) -> LayoutImage:
        return render_layout(self.load_tree(record), self.grid_w, self.grid_h)

    def retrieve_similar(self, query_id: str, k: int) -> list[tuple[DatasetRecord, float]]:
        """Top-k validated records nearest to the query by layout distance."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query = self.get_record(query_id)
        if query.status != "validated":
            raise NotFound(f"record {query_id!r} is not validated")
        candidates = [r for r in self.list_records(status="validated") if r.record_id != query_id]
        if len(candidates) < k:
            raise InsufficientCorpus(
                f"need {k} validated candidates, have {len(candidates)}"
            )
        query_layout = self.layout_of(query)
        scored = [
            (record, layout_distance(query_layout, self.layout_of(record)))
            for record in candidates
        ]
        scored.sort(key=lambda pair: (pair[1], pair[0].record_id))
        return scored[:k]

    # -- statistics

    def corpus_stats(self) -> "CorpusStats":
        records = self.list_records()
        by_status: dict[str, int] = {s: 0 for s in STATUSES}
        by_category: dict[str, int] = {}
        by_app: dict[str, int] = {}
        for r in records:
            by_status[r.status] = by_status.get(r.status, 0) + 1
            category = r.app_category or self.app_meta(r.app_id).category
            by_category[category or "(uncategorized)"] = (
                by_category.get(category or "(uncategorized)", 0) + 1
            )
            by_app[r.app_id] = by_app.get(r.app_id, 0) + 1
        total = len(records)
        kept = by_status.get("pending", 0) + by_status.get("validated", 0)
        retention = 1.0 if total == 0 else kept / total
        rated = [
            self.app_meta(a).rating for a in by_app if self.app_meta(a).rating > 0
        ]
        installs = [
            self.app_meta(a).installs for a in by_app if self.app_meta(a).installs > 0
        ]
        return CorpusStats(
            total=total,
            by_status=by_status,
            by_category=dict(sorted(by_category.items())),
            by_app=dict(sorted(by_app.items())),
            retention_fraction=retention,
            mean_rating=sum(rated) / len(rated) if rated else 0.0,
            mean_installs=sum(installs) / len(installs) if installs else 0.0,
        )


@dataclass
class CorpusStats:
    total: int
    by_status: dict[str, int]
    by_category: dict[str, int]
    by_app: dict[str, int]
    retention_fraction: float
    mean_rating: float = 0.0
    mean_installs: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["section", "key", "value"])
        writer.writerow(["summary", "total", self.total])
        writer.writerow(["summary", "retention_fraction", f"{self.retention_fraction:.4f}"])
        if self.mean_rating:
            writer.writerow(["summary", "mean_rating", f"{self.mean_rating:.2f}"])
        if self.mean_installs:
            writer.writerow(["summary", "mean_installs", f"{self.mean_installs:.0f}"])
        for status, count in sorted(self.by_status.items()):
            writer.writerow(["status", status, count])
        for category, count in self.by_category.items():
            writer.writerow(["category", category, count])
        for app_id, count in self.by_app.items():
            writer.writerow(["app", app_id, count])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [
            f"records          {self.total}",
            f"retention        {self.retention_fraction * 100:.1f}%",
        ]
        if self.mean_rating:
            lines.append(f"mean rating      {self.mean_rating:.2f}")
        if self.mean_installs:
            lines.append(f"mean installs    {self.mean_installs:.0f}")
        lines.append("by status")
        for status, count in sorted(self.by_status.items()):
            lines.append(f"  {status:<14} {count}")
        lines.append("by category")
        for category, count in self.by_category.items():
            lines.append(f"  {category:<14} {count}")
        lines.append("by app")
        for app_id, count in self.by_app.items():
            lines.append(f"  {app_id:<14} {count}")
        return "\n".join(lines)
