"""Local HTTP service backing manual curation of composite clips.

Decisions are event-sourced: every accept/reject is appended to a
line-delimited log beside the manifest and flushed immediately; the
manifest stores only the folded latest verdict per clip. Replaying the log
reconstructs the current state exactly. Reads are concurrent; decision
writes serialize through one lock.
"""

from __future__ import annotations

import json
import os
import socket
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, field_validator, model_validator

from .clips import FRAME_FILE_PATTERN
from .errors import ConfigError
from .manifest import (
    REJECTION_REASONS,
    DatasetManifest,
    ManifestEntry,
    ReviewDecision,
    read_manifest,
    write_manifest,
)

DECISION_LOG_NAME = "decisions.jsonl"
LAYERS = ("input", "mask", "gt")


class DecisionLog:
    """Append-only JSONL log of review decisions; latest entry per clip wins."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def append(self, decision: ReviewDecision) -> None:
        line = json.dumps(decision.to_dict(), sort_keys=True)
        with open(self.path, "a") as f:
            f.write(line + "\n")
            f.flush()
            os.fsync(f.fileno())

    def replay(self) -> dict[str, ReviewDecision]:
        if not self.path.exists():
            return {}
        folded: dict[str, ReviewDecision] = {}
        with open(self.path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                d = ReviewDecision.from_dict(json.loads(line))
                folded[d.clip_id] = d
        return folded


@dataclass
class CuratedExport:
    """Accepted clip ids grouped by split and Crowd% bin."""

    splits: dict[str, dict[int, list[str]]] = field(default_factory=dict)
    accepted_count: int = 0
    rejected_count: int = 0
    pending_count: int = 0

    def to_dict(self) -> dict:
        return {
            "splits": {
                split: {str(b): ids for b, ids in sorted(bins.items())}
                for split, bins in sorted(self.splits.items())
            },
            "accepted_count": self.accepted_count,
            "rejected_count": self.rejected_count,
            "pending_count": self.pending_count,
        }


def export_curated(manifest: DatasetManifest) -> CuratedExport:
    """Accepted composites only; pending and rejected clips are counted out."""
    export = CuratedExport()
    for e in sorted(manifest.by_role("composite"), key=lambda e: e.clip_id):
        status = e.review_status
        if status == "accepted":
            export.accepted_count += 1
            bin_index = e.crowd.crowd_bin if e.crowd is not None else -1
            export.splits.setdefault(e.split, {}).setdefault(bin_index, []).append(e.clip_id)
        elif status == "rejected":
            export.rejected_count += 1
        else:
            export.pending_count += 1
    return export


class DecisionRequest(BaseModel):
    verdict: str
    reasons: list[str] = []
    note: str = ""

    @field_validator("verdict")
    @classmethod
    def _verdict_known(cls, v: str) -> str:
        if v not in ("accepted", "rejected"):
            raise ValueError(f"verdict must be accepted or rejected, got {v!r}")
        return v

    @field_validator("reasons")
    @classmethod
    def _reasons_known(cls, reasons: list[str]) -> list[str]:
        unknown = [r for r in reasons if r not in REJECTION_REASONS]
        if unknown:
            raise ValueError(f"unknown reason tags: {unknown}")
        return reasons

    @model_validator(mode="after")
    def _rejection_needs_reason(self):
        if self.verdict == "rejected" and not self.reasons:
            raise ValueError("a rejection must carry at least one reason")
        return self


def _entry_payload(e: ManifestEntry) -> dict:
    payload = {
        "clip_id": e.clip_id,
        "role": e.role,
        "split": e.split,
        "status": e.review_status,
        "crowd_percent": e.crowd.crowd_percent if e.crowd else None,
        "crowd_bin": e.crowd.crowd_bin if e.crowd else None,
        "background_id": e.background_id,
        "foreground_id": e.foreground_id,
        "shadow_params": None,
        "review": e.review.to_dict() if e.review else None,
    }
    if e.shadow_params is not None:
        p = e.shadow_params
        payload["shadow_params"] = {
            "theta": p.theta,
            "s_x": p.s_x,
            "s_y": p.s_y,
            "alpha": p.alpha,
            "sigma": p.sigma,
        }
    return payload


def create_app(
    manifest_path: str | Path,
    dataset_root: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the review service over one manifest.

    On startup the decision log (if present) is replayed over the manifest,
    so the log is the source of truth for verdicts.
    """
    manifest_path = Path(manifest_path)
    dataset_root = Path(dataset_root) if dataset_root else manifest_path.parent
    manifest = read_manifest(manifest_path)
    log = DecisionLog(manifest_path.parent / DECISION_LOG_NAME)
    lock = threading.Lock()

    for clip_id, decision in log.replay().items():
        if manifest.has(clip_id):
            manifest.get(clip_id).review = decision

    app = FastAPI(title="crowdforge review service")

    @app.get("/clips")
    def list_clips(
        bin: int | None = Query(default=None, ge=0, le=4),
        status: str | None = Query(default=None, pattern="^(pending|accepted|rejected)$"),
        split: str | None = None,
    ):
        out = []
        for e in sorted(manifest.by_role("composite"), key=lambda e: e.clip_id):
            if bin is not None and (e.crowd is None or e.crowd.crowd_bin != bin):
                continue
            if status is not None and e.review_status != status:
                continue
            if split is not None and e.split != split:
                continue
            out.append(_entry_payload(e))
        return {"clips": out, "total": len(out), "frame_count": manifest.clip_len}

    @app.get("/clips/{clip_id}")
    def clip_detail(clip_id: str):
        if not manifest.has(clip_id):
            raise HTTPException(status_code=404, detail=f"unknown clip: {clip_id}")
        payload = _entry_payload(manifest.get(clip_id))
        payload["frame_count"] = manifest.clip_len
        payload["fps"] = manifest.fps
        return payload

    @app.get("/clips/{clip_id}/frames/{index}")
    def clip_frame(clip_id: str, index: int, layer: str = Query(default="input")):
        if layer not in LAYERS:
            raise HTTPException(status_code=422, detail=f"layer must be one of {LAYERS}")
        if not manifest.has(clip_id):
            raise HTTPException(status_code=404, detail=f"unknown clip: {clip_id}")
        entry = manifest.get(clip_id)
        rel = entry.paths.get(layer)
        if rel is None:
            raise HTTPException(status_code=404, detail=f"clip has no {layer} layer")
        path = dataset_root / rel / (FRAME_FILE_PATTERN % index)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no frame {index} for {clip_id}")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/clips/{clip_id}/decision")
    def post_decision(clip_id: str, body: DecisionRequest):
        if not manifest.has(clip_id):
            raise HTTPException(status_code=404, detail=f"unknown clip: {clip_id}")
        decision = ReviewDecision(
            clip_id=clip_id,
            verdict=body.verdict,
            reasons=list(body.reasons),
            note=body.note,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
        with lock:
            log.append(decision)
            manifest.get(clip_id).review = decision
            write_manifest(manifest, manifest_path)
        return _entry_payload(manifest.get(clip_id))

    @app.get("/export")
    def export():
        with lock:
            return export_curated(manifest).to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(
    manifest_path: str | Path,
    dataset_root: str | Path | None = None,
    port: int = 8420,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
) -> None:
    """Run the review service until interrupted."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as probe:
        # SO_REUSEADDR matches uvicorn's own listener: an active listener
        # still fails the probe, TIME_WAIT remnants of a previous run don't.
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            probe.bind((host, port))
        except OSError as e:
            raise ConfigError(f"cannot bind {host}:{port}: {e}") from e

    import uvicorn

    app = create_app(manifest_path, dataset_root, ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
