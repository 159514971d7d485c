"""HTTP service for human validation of pending dataset records."""

from __future__ import annotations

import random
import time
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel, field_validator, model_validator

from ui_miner.noise import NoiseFlag
from ui_miner.store import DatasetRecord, DatasetStore, NotFound, StoreError

REASONS = ("partially_rendered", "overlaid_view_hierarchy", "duplicate_ui", "other")

_REASON_TO_FLAG_KIND = {
    "partially_rendered": "partial_render",
    "overlaid_view_hierarchy": "overlaid",
    "duplicate_ui": "duplicate",
    "other": "other",
}


class DecisionBody(BaseModel):
    verdict: str
    reasons: list[str] = []
    other_text: str = ""
    annotator_id: str = ""

    @field_validator("verdict")
    @classmethod
    def _verdict_known(cls, v: str) -> str:
        if v not in ("valid", "invalid"):
            raise ValueError("verdict must be valid or invalid")
        return v

    @field_validator("reasons")
    @classmethod
    def _reasons_known(cls, v: list[str]) -> list[str]:
        for reason in v:
            if reason not in REASONS:
                raise ValueError(f"unknown reason {reason!r}")
        if len(set(v)) != len(v):
            raise ValueError("duplicate reasons")
        return v

    @model_validator(mode="after")
    def _invariants(self) -> "DecisionBody":
        if self.verdict == "invalid" and not self.reasons:
            raise ValueError("invalid verdict requires at least one reason")
        if self.verdict == "valid" and self.reasons:
            raise ValueError("valid verdict must not carry reasons")
        if "other" in self.reasons and not self.other_text.strip():
            raise ValueError("reason 'other' requires other_text")
        return self


def _record_payload(store: DatasetStore, record: DatasetRecord) -> dict:
    tree = store.load_tree(record)
    boxes = [
        {
            "left": n.bounds.left,
            "top": n.bounds.top,
            "right": n.bounds.right,
            "bottom": n.bounds.bottom,
        }
        for n in tree.iter_nodes()
        if not n.children
    ]
    return {
        "record_id": record.record_id,
        "app_id": record.app_id,
        "activity": record.activity_name,
        "status": record.status,
        "screenshot_url": f"/blobs/{record.screenshot_path}",
        "screen": {"width": tree.screen_width, "height": tree.screen_height},
        "boxes": boxes,
    }


def _sort_key(record: DatasetRecord) -> tuple:
    return (record.app_id, record.captured_at, record.record_id)


def create_app(
    store: DatasetStore,
    clock: Optional[Callable[[], int]] = None,
    cors_origins: Optional[list[str]] = None,
) -> FastAPI:
    clock = clock or (lambda: time.time_ns() // 1_000_000)
    app = FastAPI(title="ui-miner annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/uis")
    def list_uis(
        status: str = Query(default="pending"),
        limit: int = Query(default=20, ge=1, le=500),
        cursor: str = Query(default=""),
    ) -> dict:
        try:
            records = store.list_records(status=status)
        except StoreError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        if cursor:
            try:
                cursor_key = _sort_key(store.get_record(cursor))
            except NotFound:
                raise HTTPException(status_code=422, detail=f"unknown cursor {cursor!r}")
            records = [r for r in records if _sort_key(r) > cursor_key]
        page = records[:limit]
        items = [_record_payload(store, r) for r in page]
        next_cursor = page[-1].record_id if len(records) > limit else None
        return {"items": items, "next_cursor": next_cursor}

    @app.post("/uis/{record_id}/decision")
    def post_decision(record_id: str, body: DecisionBody) -> dict:
        flags = []
        if body.verdict == "invalid":
            for reason in body.reasons:
                detail = body.other_text if reason == "other" else reason
                flags.append(
                    NoiseFlag(kind=_REASON_TO_FLAG_KIND[reason], detail=detail, source="human")
                )
        try:
            accepted = store.apply_decision(
                record_id=record_id,
                verdict=body.verdict,
                flags=flags,
                annotator_id=body.annotator_id,
                decided_at=clock(),
            )
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except StoreError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        if not accepted:
            raise HTTPException(status_code=409, detail=f"record {record_id} already decided")
        record = store.get_record(record_id)
        return {"record_id": record_id, "status": record.status}

    @app.get("/audit/sample")
    def audit_sample(fraction: float = Query(...), seed: int = Query(default=0)) -> dict:
        if not (0 < fraction <= 1):
            raise HTTPException(status_code=422, detail="fraction must be in (0, 1]")
        decided = sorted(
            store.list_records(status="validated") + store.list_records(status="flagged"),
            key=lambda r: r.record_id,
        )
        n = int(fraction * len(decided))
        rng = random.Random(seed)
        sample = rng.sample([r.record_id for r in decided], n)
        return {"count": n, "records": sample}

    @app.get("/blobs/{blob_path:path}")
    def get_blob(blob_path: str):
        full = (store.root / blob_path).resolve()
        if store.root.resolve() not in full.parents:
            raise HTTPException(status_code=404, detail="no such blob")
        if not full.is_file():
            raise HTTPException(status_code=404, detail="no such blob")
        return FileResponse(full)

    return app
