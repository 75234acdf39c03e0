"""Dataset manifest: clip provenance, filter verdicts, and review state.

The manifest is a single JSON document at the dataset root. It is the only
mutable artifact in the pipeline; every stage rewrites it whole-file
atomically (write temp, then rename). Serialization is key-sorted so equal
manifests are byte-identical on disk.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .clips import ClipSpan
from .errors import ValidationError
from .filters import FilterVerdict
from .selection import CrowdStats
from .shadows import ShadowParams

ROLES = ("background", "foreground", "composite")
VERDICTS = ("accepted", "rejected")
REJECTION_REASONS = (
    "floating_humans",
    "disappearing_objects",
    "subtitles_or_overlays",
    "abrupt_camera_motion",
    "clip_overlap",
    "other",
)

STAGE_ORDER = ("ingest", "filter-bg", "select-fg", "compose", "evaluate")


@dataclass
class ReviewDecision:
    """One accept/reject decision from manual curation.

    A rejection must carry at least one reason tag. The manifest stores the
    folded latest decision per clip; the full history lives in the
    append-only decision log next to the manifest.
    """

    clip_id: str
    verdict: str
    reasons: list[str] = field(default_factory=list)
    note: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if self.verdict == "rejected" and not self.reasons:
            raise ValidationError("a rejection must carry at least one reason")

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "verdict": self.verdict,
            "reasons": list(self.reasons),
            "note": self.note,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewDecision":
        return cls(
            clip_id=d["clip_id"],
            verdict=d["verdict"],
            reasons=list(d.get("reasons", [])),
            note=d.get("note", ""),
            timestamp=d.get("timestamp", ""),
        )


@dataclass
class ManifestEntry:
    """Provenance and pipeline state for one clip."""

    clip_id: str
    role: str
    split: str = "train"
    source: ClipSpan | None = None
    width: int | None = None
    height: int | None = None
    paths: dict[str, str] = field(default_factory=dict)
    filter_verdict: FilterVerdict | None = None
    crowd: CrowdStats | None = None
    selected: bool | None = None
    background_id: str | None = None
    foreground_id: str | None = None
    shadow_params: ShadowParams | None = None
    seed: int | None = None
    review: ReviewDecision | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.role == "composite" and (not self.background_id or not self.foreground_id):
            raise ValidationError(
                f"composite {self.clip_id} must reference a background and a foreground"
            )

    @property
    def review_status(self) -> str:
        return self.review.verdict if self.review is not None else "pending"

    def to_dict(self) -> dict:
        d: dict = {
            "clip_id": self.clip_id,
            "role": self.role,
            "split": self.split,
            "paths": dict(sorted(self.paths.items())),
        }
        if self.width is not None:
            d["width"] = self.width
        if self.height is not None:
            d["height"] = self.height
        if self.source is not None:
            d["source"] = {
                "source_video_id": self.source.source_video_id,
                "start_frame": self.source.start_frame,
                "end_frame": self.source.end_frame,
            }
        if self.filter_verdict is not None:
            v = self.filter_verdict
            d["filter_verdict"] = {
                "mean_luminance": v.mean_luminance,
                "transition_indices": list(v.transition_indices),
                "person_violation_fraction": v.person_violation_fraction,
                "luminance_passed": v.luminance_passed,
                "transitions_passed": v.transitions_passed,
                "person_passed": v.person_passed,
            }
        if self.crowd is not None:
            d["crowd"] = {
                "masked_frame_count": self.crowd.masked_frame_count,
                "crowd_percent": self.crowd.crowd_percent,
                "crowd_bin": self.crowd.crowd_bin,
            }
        if self.selected is not None:
            d["selected"] = self.selected
        if self.background_id is not None:
            d["background_id"] = self.background_id
        if self.foreground_id is not None:
            d["foreground_id"] = self.foreground_id
        if self.shadow_params is not None:
            p = self.shadow_params
            d["shadow_params"] = {
                "theta": p.theta,
                "s_x": p.s_x,
                "s_y": p.s_y,
                "alpha": p.alpha,
                "sigma": p.sigma,
            }
        if self.seed is not None:
            d["seed"] = self.seed
        if self.review is not None:
            d["review"] = self.review.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        source = None
        if "source" in d:
            s = d["source"]
            source = ClipSpan(s["source_video_id"], s["start_frame"], s["end_frame"])
        verdict = None
        if "filter_verdict" in d:
            verdict = FilterVerdict(**d["filter_verdict"])
        crowd = None
        if "crowd" in d:
            crowd = CrowdStats(**d["crowd"])
        params = None
        if "shadow_params" in d:
            params = ShadowParams(**d["shadow_params"])
        review = None
        if "review" in d:
            review = ReviewDecision.from_dict(d["review"])
        return cls(
            clip_id=d["clip_id"],
            role=d["role"],
            split=d.get("split", "train"),
            source=source,
            width=d.get("width"),
            height=d.get("height"),
            paths=dict(d.get("paths", {})),
            filter_verdict=verdict,
            crowd=crowd,
            selected=d.get("selected"),
            background_id=d.get("background_id"),
            foreground_id=d.get("foreground_id"),
            shadow_params=params,
            seed=d.get("seed"),
            review=review,
        )


@dataclass
class DatasetManifest:
    """All clip entries plus dataset-level provenance."""

    entries: list[ManifestEntry] = field(default_factory=list)
    clip_len: int = 197
    fps: float = 16.0
    background_root: str = ""
    foreground_root: str = ""
    stages_completed: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        seen: set[str] = set()
        for e in self.entries:
            if e.clip_id in seen:
                raise ValidationError(f"duplicate clip_id: {e.clip_id}")
            seen.add(e.clip_id)
        for e in self.entries:
            if e.role == "composite":
                if e.background_id not in seen:
                    raise ValidationError(
                        f"composite {e.clip_id} references missing background "
                        f"{e.background_id}"
                    )
                if e.foreground_id not in seen:
                    raise ValidationError(
                        f"composite {e.clip_id} references missing foreground "
                        f"{e.foreground_id}"
                    )

    def get(self, clip_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.clip_id == clip_id:
                return e
        raise KeyError(clip_id)

    def has(self, clip_id: str) -> bool:
        return any(e.clip_id == clip_id for e in self.entries)

    def by_role(self, role: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.role == role]

    def mark_stage(self, stage: str) -> None:
        if stage not in self.stages_completed:
            self.stages_completed.append(stage)
            self.stages_completed.sort(key=STAGE_ORDER.index)

    def stage_done(self, stage: str) -> bool:
        return stage in self.stages_completed

    def to_dict(self) -> dict:
        return {
            "clip_len": self.clip_len,
            "fps": self.fps,
            "background_root": self.background_root,
            "foreground_root": self.foreground_root,
            "stages_completed": list(self.stages_completed),
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            entries=[ManifestEntry.from_dict(e) for e in d.get("entries", [])],
            clip_len=d.get("clip_len", 197),
            fps=d.get("fps", 16.0),
            background_root=d.get("background_root", ""),
            foreground_root=d.get("foreground_root", ""),
            stages_completed=list(d.get("stages_completed", [])),
        )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Atomically persist the manifest (temp file + rename)."""
    manifest.validate()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    with open(path) as f:
        return DatasetManifest.from_dict(json.load(f))
