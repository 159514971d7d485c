"""Automated noise pipeline: structural-hash dedup, overlay and partial-render flags."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, Optional, Sequence

from ui_miner.hierarchy import Rect, ViewTree

if TYPE_CHECKING:  # pragma: no cover - typing only
    from ui_miner.device import ScreenCapture
    from ui_miner.store import DatasetRecord


class ScorerUnavailable(Exception):
    """External overlay scorer could not be reached or answered garbage."""


UNKNOWN_TYPE_INDEX = 999

# Common android.widget simple names beyond the three pinned ones; indices are
# assigned lexicographically starting at 3 so the table is total and stable.
_EXTRA_WIDGET_NAMES = sorted(
    [
        "AutoCompleteTextView",
        "CalendarView",
        "CheckBox",
        "CheckedTextView",
        "Chronometer",
        "DatePicker",
        "EditText",
        "ExpandableListView",
        "FrameLayout",
        "GridLayout",
        "GridView",
        "HorizontalScrollView",
        "ImageButton",
        "ImageView",
        "LinearLayout",
        "ListView",
        "MultiAutoCompleteTextView",
        "NumberPicker",
        "ProgressBar",
        "RadioButton",
        "RadioGroup",
        "RelativeLayout",
        "ScrollView",
        "SearchView",
        "SeekBar",
        "Spinner",
        "Switch",
        "TabHost",
        "TabWidget",
        "TableLayout",
        "TableRow",
        "TextClock",
        "TimePicker",
        "ToggleButton",
        "Toolbar",
        "VideoView",
        "View",
        "ViewGroup",
        "WebView",
    ]
)


@dataclass(frozen=True)
class TypeIndexTable:
    """Injective map from widget simple name to a small integer index.

    Button, TextView and RatingBar are pinned to 0, 1, 2; names missing from
    the table fall back to unknown_index.
    """

    types: dict[str, int] = field(default_factory=dict)
    unknown_index: int = UNKNOWN_TYPE_INDEX

    def __post_init__(self) -> None:
        pinned = {"Button": 0, "TextView": 1, "RatingBar": 2}
        for name, idx in pinned.items():
            if self.types.get(name, idx) != idx:
                raise ValueError(f"{name} must map to {idx}")
        values = list(self.types.values()) + [self.unknown_index]
        if len(set(values)) != len(values):
            raise ValueError("type index table is not injective")

    def index_of(self, widget_class: str) -> int:
        simple = widget_class.rsplit(".", 1)[-1]
        return self.types.get(simple, self.unknown_index)


def default_type_index_table() -> TypeIndexTable:
    types = {"Button": 0, "TextView": 1, "RatingBar": 2}
    types.update({name: i + 3 for i, name in enumerate(_EXTRA_WIDGET_NAMES)})
    return TypeIndexTable(types=types)


DEFAULT_TYPE_TABLE = default_type_index_table()


def load_type_index_table(path: str) -> TypeIndexTable:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return TypeIndexTable(
        types={str(k): int(v) for k, v in data["types"].items()},
        unknown_index=int(data.get("unknown_index", UNKNOWN_TYPE_INDEX)),
    )


def structure_repr(tree: ViewTree, table: TypeIndexTable = DEFAULT_TYPE_TABLE) -> str:
    """Pre-order `<node_index>_<type_index>` reprs joined with ';'.

    The separator keeps the repr injective; plain concatenation would make
    e.g. '0_11_0' ambiguous.
    """
    parts = []
    for i, node in enumerate(tree.iter_nodes()):
        parts.append(f"{i}_{table.index_of(node.widget_class)}")
    return ";".join(parts)


def structural_hash(tree: ViewTree, table: TypeIndexTable = DEFAULT_TYPE_TABLE) -> str:
    """MD5 of the structure repr; equality defines UI duplication."""
    return hashlib.md5(structure_repr(tree, table).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class NoiseFlag:
    kind: str  # duplicate | overlaid | partial_render | other
    detail: str = ""
    source: str = "auto"  # auto | human


def detect_duplicates(
    records: Sequence["DatasetRecord"],
    table: TypeIndexTable = DEFAULT_TYPE_TABLE,
) -> dict[str, NoiseFlag]:
    """Flag every record whose structural hash repeats an earlier one.

    Duplicates are tracked per app; the first occurrence in capture order is
    retained and each later one gets a flag whose detail names the retained
    record. Returns a mapping record_id -> flag for the flagged records only.
    """
    first_seen: dict[tuple[str, str], str] = {}
    flags: dict[str, NoiseFlag] = {}
    for record in records:
        digest = record.tree_digest or structural_hash(record.require_tree(), table)
        key = (record.app_id, digest)
        kept = first_seen.get(key)
        if kept is None:
            first_seen[key] = record.record_id
        else:
            flags[record.record_id] = NoiseFlag(kind="duplicate", detail=kept)
    return flags


@dataclass(frozen=True)
class OverlaidNode:
    draw_index: int
    score: float


def _is_descendant(ancestor_index: int, node_index: int, parent_of: dict[int, int]) -> bool:
    i = node_index
    while i in parent_of:
        i = parent_of[i]
        if i == ancestor_index:
            return True
    return False


OverlayScorer = Callable[[bytes, Rect], float]


def detect_overlaid(
    tree: ViewTree,
    scorer: Optional[OverlayScorer] = None,
    screenshot: bytes = b"",
    threshold: float = 0.5,
) -> list[OverlaidNode]:
    """Find nodes hidden behind later-drawn views.

    Default heuristic: a node is overlaid (score 1.0) iff some single node
    with a strictly greater draw_index that is not its descendant fully
    contains its bounds. With an external scorer, every node is scored and
    those above the threshold are returned.
    """
    nodes = list(tree.iter_nodes())
    if scorer is not None:
        hits = []
        for node in nodes:
            score = scorer(screenshot, node.bounds)
            if score > threshold:
                hits.append(OverlaidNode(draw_index=node.draw_index, score=score))
        return hits

    parent_of: dict[int, int] = {}
    for node in nodes:
        for child in node.children:
            parent_of[child.draw_index] = node.draw_index
    hits = []
    for node in nodes:
        for other in nodes:
            if other.draw_index <= node.draw_index:
                continue
            if _is_descendant(node.draw_index, other.draw_index, parent_of):
                continue
            if other.bounds.contains(node.bounds):
                hits.append(OverlaidNode(draw_index=node.draw_index, score=1.0))
                break
    return hits


class HttpOverlayScorer:
    """Scores occlusion probability via an external HTTP classifier.

    Request: JSON {"screenshot_b64": ..., "mask": {left, top, right, bottom}}.
    Response: JSON {"probability": float}.
    """

    def __init__(self, url: str, timeout_s: float = 10.0):
        self.url = url
        self.timeout_s = timeout_s

    def __call__(self, screenshot: bytes, rect: Rect) -> float:
        import base64

        import requests

        body = {
            "screenshot_b64": base64.b64encode(screenshot).decode("ascii"),
            "mask": {
                "left": rect.left,
                "top": rect.top,
                "right": rect.right,
                "bottom": rect.bottom,
            },
        }
        try:
            resp = requests.post(self.url, json=body, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise ScorerUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise ScorerUnavailable(f"scorer returned HTTP {resp.status_code}")
        try:
            return float(resp.json()["probability"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ScorerUnavailable(f"bad scorer response: {exc}") from exc


def detect_partial_render(capture: "ScreenCapture", stability_flag: bool) -> Optional[NoiseFlag]:
    """Flag a capture whose hierarchy had not settled when it was taken."""
    if stability_flag:
        return None
    return NoiseFlag(
        kind="partial_render",
        detail=f"unstable capture of {capture.activity_name}",
    )


def retention_fraction(total: int, auto_removed: int, human_removed: int = 0) -> float:
    """Fraction of captures that survive both automated and human removal."""
    if total == 0:
        return 1.0
    return (total - auto_removed - human_removed) / total


@dataclass
class PipelineReport:
    total: int
    kept: int
    removed_by_kind: dict[str, int]
    retention_fraction: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "total": self.total,
                "kept": self.kept,
                "removed_by_kind": self.removed_by_kind,
                "retention_fraction": self.retention_fraction,
            },
            indent=2,
            sort_keys=True,
        )

    def to_table(self) -> str:
        lines = [
            f"total records   {self.total}",
            f"kept            {self.kept}",
        ]
        for kind in ("partial_render", "duplicate", "overlaid"):
            lines.append(f"removed {kind:<15} {self.removed_by_kind.get(kind, 0)}")
        lines.append(f"retention       {self.retention_fraction * 100:.1f}%")
        return "\n".join(lines)


def run_pipeline(
    records: Iterable["DatasetRecord"],
    table: TypeIndexTable = DEFAULT_TYPE_TABLE,
    scorer: Optional[OverlayScorer] = None,
    threshold: float = 0.5,
) -> PipelineReport:
    """Apply partial-render, duplicate and overlay detectors in that order.

    Records removed by an earlier stage do not participate in later ones, so
    dedup retains the earliest *surviving* capture. Flags and auto_removed
    statuses are written onto the records in place.
    """
    items = list(records)
    removed_by_kind = {"partial_render": 0, "duplicate": 0, "overlaid": 0}

    survivors = []
    for record in items:
        flag = detect_partial_render_record(record)
        if flag is not None:
            record.flags.append(flag)
            record.status = "auto_removed"
            removed_by_kind["partial_render"] += 1
        else:
            survivors.append(record)

    dup_flags = detect_duplicates(survivors, table)
    deduped = []
    for record in survivors:
        flag = dup_flags.get(record.record_id)
        if flag is not None:
            record.flags.append(flag)
            record.status = "auto_removed"
            removed_by_kind["duplicate"] += 1
        else:
            deduped.append(record)

    kept = 0
    for record in deduped:
        hits = detect_overlaid(record.require_tree(), scorer=scorer, threshold=threshold)
        if hits:
            detail = ",".join(str(h.draw_index) for h in hits)
            record.flags.append(NoiseFlag(kind="overlaid", detail=detail))
            record.status = "auto_removed"
            removed_by_kind["overlaid"] += 1
        else:
            kept += 1

    total = len(items)
    return PipelineReport(
        total=total,
        kept=kept,
        removed_by_kind=removed_by_kind,
        retention_fraction=retention_fraction(total, total - kept),
    )


def detect_partial_render_record(record: "DatasetRecord") -> Optional[NoiseFlag]:
    if record.stable:
        return None
    return NoiseFlag(kind="partial_render", detail=f"unstable capture {record.record_id}")
