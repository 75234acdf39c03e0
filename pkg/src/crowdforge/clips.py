"""Core clip data types and frame/mask directory I/O.

A clip is a short, fixed-length run of RGB frames. Frames live on disk as
``frames/frame_%05d.png`` (8-bit RGB, lossless); instance masks as one
16-bit indexed PNG per frame (pixel value = instance id, 0 = background)
plus a ``labels.json`` sidecar mapping id -> label string.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, EmptyInputError, FormatError, ValidationError

logger = logging.getLogger(__name__)

FRAME_FILE_PATTERN = "frame_%05d.png"
_FRAME_FILE_RE = re.compile(r"frame_(\d{5})\.png$")

# Directory basenames that hold frames for some parent clip; the clip id
# comes from the parent in that case.
_LAYER_DIR_NAMES = {"frames", "masks", "input", "mask", "gt"}

#: A single frame is a (height, width, 3) uint8 array.
Frame = np.ndarray


@dataclass
class FrameSequence:
    """Ordered RGB frames of one clip at a fixed resolution.

    ``frames`` is a (T, H, W, 3) uint8 array; ``fps`` is nominal only and
    never used in pixel math.
    """

    frames: np.ndarray
    fps: float = 16.0
    clip_id: str = ""

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 4 or f.shape[0] < 1 or f.shape[3] != 3:
            raise ValidationError(f"frames must be (T,H,W,3), got {f.shape}")
        if f.dtype != np.uint8:
            raise ValidationError(f"frames must be uint8, got {f.dtype}")
        if f.shape[1] < 1 or f.shape[2] < 1:
            raise ValidationError("frame dimensions must be positive")
        self.frames = f

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def frame(self, t: int) -> Frame:
        return self.frames[t]


@dataclass
class InstanceMaskSequence:
    """Per-frame, per-instance binary masks with instance labels.

    ``masks[t]`` maps instance_id -> boolean (H, W) raster. Frames with no
    detected instances hold an empty dict. ``labels`` maps instance_id to a
    label string such as ``person`` or ``bag``.
    """

    masks: list[dict[int, np.ndarray]]
    labels: dict[int, str] = field(default_factory=dict)
    frame_shape: tuple[int, int] | None = None

    def __post_init__(self):
        if len(self.masks) < 1:
            raise ValidationError("mask sequence needs at least one frame")
        shape = tuple(self.frame_shape) if self.frame_shape is not None else None
        for t, per_frame in enumerate(self.masks):
            for iid, m in per_frame.items():
                if iid <= 0:
                    raise ValidationError(f"instance_id must be > 0, got {iid}")
                m = np.asarray(m)
                if m.dtype != np.bool_:
                    if not np.isin(m, (0, 1)).all():
                        raise ValidationError(f"mask for instance {iid} is not binary")
                    m = m.astype(bool)
                if shape is None:
                    shape = m.shape
                elif m.shape != shape:
                    raise ValidationError(
                        f"frame {t} instance {iid}: mask shape {m.shape} != {shape}"
                    )
                per_frame[iid] = m
        if shape is not None:
            self.frame_shape = (int(shape[0]), int(shape[1]))

    @property
    def frame_count(self) -> int:
        return len(self.masks)

    def instance_ids(self) -> list[int]:
        """All instance ids appearing anywhere in the clip, sorted."""
        ids: set[int] = set()
        for per_frame in self.masks:
            ids.update(per_frame)
        return sorted(ids)

    def union_mask(self, t: int) -> np.ndarray:
        """Boolean union of all instance masks in frame ``t``."""
        per_frame = self.masks[t]
        if not per_frame:
            return np.zeros(self.mask_shape(), dtype=bool)
        out = np.zeros(self.mask_shape(), dtype=bool)
        for m in per_frame.values():
            out |= m
        return out

    def mask_shape(self) -> tuple[int, int]:
        if self.frame_shape is not None:
            return self.frame_shape
        raise EmptyInputError("mask sequence contains no instance masks")

    def label(self, instance_id: int) -> str:
        return self.labels.get(instance_id, "unknown")


@dataclass(frozen=True)
class ClipSpan:
    """Half-open frame range [start_frame, end_frame) of one source video."""

    source_video_id: str
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.end_frame <= self.start_frame:
            raise ValidationError(
                f"span must be non-empty: [{self.start_frame}, {self.end_frame})"
            )

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


def segment_into_clips(
    frame_count: int, clip_len: int, stride: int, source_video_id: str = ""
) -> list[ClipSpan]:
    """Cut a source video into disjoint fixed-length clip spans.

    The spans tile [0, frame_count) left to right; a trailing remainder
    shorter than ``clip_len`` is dropped. ``stride`` must be >= ``clip_len``
    so spans never overlap.
    """
    if clip_len < 1:
        raise ConfigError(f"clip_len must be >= 1, got {clip_len}")
    if stride < clip_len:
        raise ConfigError(f"stride {stride} < clip_len {clip_len} would overlap clips")
    spans = []
    start = 0
    while start + clip_len <= frame_count:
        spans.append(ClipSpan(source_video_id, start, start + clip_len))
        start += stride
    return spans


def _clip_id_for_dir(dir_path: Path) -> str:
    if dir_path.name in _LAYER_DIR_NAMES and dir_path.parent.name:
        return dir_path.parent.name
    return dir_path.name


def _list_frame_files(dir_path: Path) -> list[Path]:
    return sorted(p for p in dir_path.iterdir() if p.suffix.lower() == ".png")


def load_frame_sequence(
    dir_path: str | Path, fps: float = 16.0, clip_id: str | None = None
) -> FrameSequence:
    """Load a frame directory into a FrameSequence, in filename order."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise FormatError(f"not a directory: {dir_path}")
    files = _list_frame_files(dir_path)
    if not files:
        raise EmptyInputError(f"no frame files in {dir_path}")
    frames = []
    shape = None
    for p in files:
        arr = np.asarray(Image.open(p).convert("RGB"))
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise FormatError(f"{p.name}: dimensions {arr.shape[:2]} != {shape[:2]}")
        frames.append(arr)
    return FrameSequence(
        frames=np.stack(frames),
        fps=fps,
        clip_id=clip_id if clip_id is not None else _clip_id_for_dir(dir_path),
    )


def save_frame_sequence(seq: FrameSequence, dir_path: str | Path) -> None:
    """Write frames as frame_%05d.png; round-trips bit-exact with load."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    for t in range(seq.frame_count):
        Image.fromarray(seq.frames[t]).save(dir_path / (FRAME_FILE_PATTERN % t))


def load_instance_masks(dir_path: str | Path, frame_count: int) -> InstanceMaskSequence:
    """Load per-frame indexed mask PNGs plus the labels.json sidecar.

    Each mask image is 16-bit grayscale where the pixel value is the
    instance id (0 = background). A frame count mismatch against the
    companion clip is a format error. Instance ids missing from the label
    sidecar are kept with label "unknown".
    """
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise FormatError(f"not a directory: {dir_path}")
    files = _list_frame_files(dir_path)
    if len(files) != frame_count:
        raise FormatError(
            f"{dir_path}: {len(files)} mask files for a {frame_count}-frame clip"
        )

    labels_path = dir_path / "labels.json"
    labels: dict[int, str] = {}
    if labels_path.exists():
        raw = json.loads(labels_path.read_text())
        labels = {int(k): str(v) for k, v in raw.items()}

    masks: list[dict[int, np.ndarray]] = []
    shape = None
    seen_ids: set[int] = set()
    for p in files:
        raster = np.asarray(Image.open(p))
        if raster.ndim != 2:
            raise FormatError(f"{p.name}: mask image must be single-channel")
        if shape is None:
            shape = raster.shape
        elif raster.shape != shape:
            raise FormatError(f"{p.name}: dimensions {raster.shape} != {shape}")
        per_frame: dict[int, np.ndarray] = {}
        for iid in np.unique(raster):
            if iid == 0:
                continue
            per_frame[int(iid)] = raster == iid
            seen_ids.add(int(iid))
        masks.append(per_frame)

    for iid in sorted(seen_ids - set(labels)):
        logger.warning("%s: instance id %d missing from labels.json", dir_path, iid)
        labels[iid] = "unknown"

    return InstanceMaskSequence(masks=masks, labels=labels, frame_shape=shape)


def save_instance_masks(masks: InstanceMaskSequence, dir_path: str | Path) -> None:
    """Write masks as indexed 16-bit PNGs plus labels.json.

    Overlapping instances cannot be represented in the indexed raster;
    higher instance ids win where masks collide.
    """
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    shape = None
    try:
        shape = masks.mask_shape()
    except EmptyInputError:
        raise ValidationError("cannot save a mask sequence with no masks at all")
    for t in range(masks.frame_count):
        raster = np.zeros(shape, dtype=np.uint16)
        for iid in sorted(masks.masks[t]):
            raster[masks.masks[t][iid]] = iid
        Image.fromarray(raster).save(dir_path / (FRAME_FILE_PATTERN % t))
    labels = {str(k): v for k, v in sorted(masks.labels.items())}
    (dir_path / "labels.json").write_text(json.dumps(labels, indent=2) + "\n")
