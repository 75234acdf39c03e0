"""Compositing: shadowed background + full-opacity foreground = triplet.

The supervised unit is a triplet (input, mask, ground truth): the input
clip is the background darkened by the soft shadow map with the segmented
humans pasted on top at full opacity, the mask is the union of the
instance masks only (shadows excluded), and the ground truth is the
untouched background.
"""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .clips import (
    FRAME_FILE_PATTERN,
    Frame,
    FrameSequence,
    InstanceMaskSequence,
    load_frame_sequence,
)
from .errors import FormatError, ShapeError, ValidationError
from .shadows import ShadowParams, render_clip_shadows


@dataclass
class Triplet:
    """Composite input clip, union human-mask clip, clean ground truth."""

    input: FrameSequence
    mask: np.ndarray  # (T, H, W) bool
    gt: FrameSequence

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.dtype != np.bool_:
            raise ValidationError("triplet mask must be boolean")
        if (
            m.shape != self.input.frames.shape[:3]
            or self.input.frames.shape != self.gt.frames.shape
        ):
            raise ValidationError(
                f"triplet shapes disagree: input {self.input.frames.shape}, "
                f"mask {m.shape}, gt {self.gt.frames.shape}"
            )
        self.mask = m

    @property
    def frame_count(self) -> int:
        return self.input.frame_count


def apply_shadow(bg: Frame, shadow: np.ndarray, alpha: float) -> Frame:
    """Darken a background frame by a soft shadow map.

    Per channel: out = round(bg * (1 - alpha * s)), round half away from
    zero, clamped to [0, 255]. Pixels with s = 0 are bit-exact copies.
    """
    bg = np.asarray(bg)
    shadow = np.asarray(shadow, dtype=np.float64)
    if bg.shape[:2] != shadow.shape:
        raise ShapeError(f"frame {bg.shape[:2]} vs shadow {shadow.shape}")
    out = bg.astype(np.float64) * (1.0 - alpha * shadow)[..., None]
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def overlay_foreground(darkened: Frame, fg: Frame, human_mask: np.ndarray) -> Frame:
    """Paste foreground pixels over the shadowed background, no blending."""
    darkened = np.asarray(darkened)
    fg = np.asarray(fg)
    human_mask = np.asarray(human_mask).astype(bool)
    if darkened.shape != fg.shape or darkened.shape[:2] != human_mask.shape:
        raise ShapeError(
            f"shapes disagree: bg {darkened.shape}, fg {fg.shape}, mask {human_mask.shape}"
        )
    return np.where(human_mask[..., None], fg, darkened)


def compose_triplet(
    bg: FrameSequence,
    fg_masks: InstanceMaskSequence,
    fg_frames: FrameSequence,
    params: ShadowParams,
) -> Triplet:
    """Build one supervised triplet from aligned background and foreground.

    Per frame: render the soft shadow map, darken the background with it,
    then overlay the foreground through the union human mask. The emitted
    mask clip is exactly that union; shadows are deliberately not in it.
    """
    if bg.frames.shape != fg_frames.frames.shape:
        raise ShapeError(
            f"background {bg.frames.shape} vs foreground {fg_frames.frames.shape}"
        )
    if fg_masks.frame_count != bg.frame_count:
        raise ShapeError(
            f"{fg_masks.frame_count} mask frames for a {bg.frame_count}-frame clip"
        )
    shape = (bg.height, bg.width)
    shadow = render_clip_shadows(fg_masks, params, frame_shape=shape)

    composed = np.empty_like(bg.frames)
    union = np.zeros((bg.frame_count, *shape), dtype=bool)
    for t in range(bg.frame_count):
        union[t] = fg_masks.union_mask(t) if fg_masks.masks[t] else union[t]
        darkened = apply_shadow(bg.frames[t], shadow.maps[t], params.alpha)
        composed[t] = overlay_foreground(darkened, fg_frames.frames[t], union[t])

    input_seq = FrameSequence(frames=composed, fps=bg.fps, clip_id=bg.clip_id)
    return Triplet(input=input_seq, mask=union, gt=bg)


def write_triplet(triplet: Triplet, out_dir: str | Path, force: bool = False) -> None:
    """Write input/, mask/, gt/ frame files under one clip directory.

    Refuses to overwrite an existing triplet unless ``force``. On a write
    failure the partial output directory is removed before re-raising.
    """
    out_dir = Path(out_dir)
    layer_dirs = [out_dir / "input", out_dir / "mask", out_dir / "gt"]
    if any(d.exists() for d in layer_dirs):
        if not force:
            raise ValidationError(f"triplet output already exists: {out_dir} (use force)")
        for d in layer_dirs:
            if d.exists():
                shutil.rmtree(d)
    try:
        for d in layer_dirs:
            d.mkdir(parents=True, exist_ok=True)
        for t in range(triplet.frame_count):
            name = FRAME_FILE_PATTERN % t
            Image.fromarray(triplet.input.frames[t]).save(out_dir / "input" / name)
            mask_img = (triplet.mask[t].astype(np.uint8)) * 255
            Image.fromarray(mask_img).save(out_dir / "mask" / name)
            Image.fromarray(triplet.gt.frames[t]).save(out_dir / "gt" / name)
    except BaseException:
        for d in layer_dirs:
            if d.exists():
                shutil.rmtree(d)
        raise


def load_triplet(clip_dir: str | Path, fps: float = 16.0) -> Triplet:
    """Load a triplet written by write_triplet, bit-exact."""
    clip_dir = Path(clip_dir)
    clip_id = clip_dir.name
    input_seq = load_frame_sequence(clip_dir / "input", fps=fps, clip_id=clip_id)
    gt_seq = load_frame_sequence(clip_dir / "gt", fps=fps, clip_id=clip_id)

    mask_dir = clip_dir / "mask"
    mask_frames = []
    for t in range(input_seq.frame_count):
        p = mask_dir / (FRAME_FILE_PATTERN % t)
        if not p.exists():
            raise FormatError(f"missing mask frame: {p}")
        mask_frames.append(np.asarray(Image.open(p).convert("L")) > 0)
    return Triplet(input=input_seq, mask=np.stack(mask_frames), gt=gt_seq)


def mask_clip_of(masks: InstanceMaskSequence, frame_shape: tuple[int, int]) -> np.ndarray:
    """Union mask clip (T, H, W) of an instance mask sequence."""
    out = np.zeros((masks.frame_count, *frame_shape), dtype=bool)
    for t in range(masks.frame_count):
        if masks.masks[t]:
            out[t] = masks.union_mask(t)
    return out
