"""Deterministic miniature corpus for demos and end-to-end tests.

Builds a tiny source tree in the production layout: smooth panning
background textures that pass every admission filter, and foreground
sources with a walking rectangular "person" (plus an occasional bag)
whose mask coverage lands one source in each Crowd% bin.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .clips import FrameSequence, InstanceMaskSequence, save_frame_sequence, save_instance_masks
from .shadows import soften

# Person rectangle widths chosen so union coverage of a 64x64 frame lands
# mid-bin for bins 0..4.
_PERSON_WIDTHS = (5, 15, 25, 35, 46)
_PERSON_HEIGHT_FRAC = 0.625


def _smooth_texture(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    noise = rng.integers(0, 256, shape).astype(np.float64)
    smooth = soften(noise / 255.0, sigma=3.0)
    lo, hi = smooth.min(), smooth.max()
    scaled = 80.0 + 100.0 * (smooth - lo) / max(hi - lo, 1e-9)
    return scaled.astype(np.uint8)


def _background_frames(
    rng: np.random.Generator, shape: tuple[int, int], n_frames: int
) -> np.ndarray:
    base = _smooth_texture(rng, shape)
    # Pan one pixel per frame: adjacent frames stay nearly identical and
    # share an exact histogram, so no transition fires.
    frames = np.stack([np.roll(base, t, axis=1) for t in range(n_frames)])
    return np.repeat(frames[..., None], 3, axis=3)


def make_toy_corpus(
    root: str | Path,
    n_backgrounds: int = 5,
    n_foregrounds: int = 5,
    frame_size: tuple[int, int] = (64, 64),
    frames_per_source: int = 16,
    fps: float = 16.0,
    seed: int = 0,
) -> tuple[Path, Path]:
    """Write a toy corpus under ``root``; returns (background_root, foreground_root)."""
    root = Path(root)
    bg_root = root / "backgrounds"
    fg_root = root / "foregrounds"
    h, w = frame_size
    t_total = frames_per_source

    for i in range(n_backgrounds):
        rng = np.random.default_rng(seed * 1000 + i)
        source_id = f"bg{i:02d}"
        frames = _background_frames(rng, frame_size, t_total)
        save_frame_sequence(
            FrameSequence(frames=frames, fps=fps, clip_id=source_id),
            bg_root / source_id / "frames",
        )
        counts = rng.integers(0, 3, t_total).tolist()
        if i == 0:
            counts[t_total // 2] = 6  # one noisy over-cap frame, still under tolerance
        (bg_root / source_id / "counts.json").write_text(json.dumps(counts))

    person_h = int(h * _PERSON_HEIGHT_FRAC)
    for i in range(n_foregrounds):
        rng = np.random.default_rng(seed * 1000 + 500 + i)
        source_id = f"fg{i:02d}"
        frames = _background_frames(rng, frame_size, t_total)
        person_w = _PERSON_WIDTHS[i % len(_PERSON_WIDTHS)]
        color = np.array([200, 60 + 30 * (i % 5), 40], dtype=np.uint8)
        y0 = h - person_h - 4
        masks: list[dict[int, np.ndarray]] = []
        for t in range(t_total):
            x0 = min(2 + t, w - person_w - 1)
            person = np.zeros(frame_size, dtype=bool)
            person[y0 : y0 + person_h, x0 : x0 + person_w] = True
            per_frame = {1: person}
            if i % 2 == 1:
                bag = np.zeros(frame_size, dtype=bool)
                bag[y0 + 4 : y0 + 8, max(x0 - 5, 0) : max(x0 - 1, 4)] = True
                per_frame[2] = bag
            frames[t][person] = color
            if 2 in per_frame:
                frames[t][per_frame[2]] = np.array([60, 50, 30], dtype=np.uint8)
            masks.append(per_frame)
        save_frame_sequence(
            FrameSequence(frames=frames, fps=fps, clip_id=source_id),
            fg_root / source_id / "frames",
        )
        labels = {1: "person"}
        if any(2 in m for m in masks):
            labels[2] = "bag"
        save_instance_masks(
            InstanceMaskSequence(masks=masks, labels=labels, frame_shape=frame_size),
            fg_root / source_id / "masks",
        )

    return bg_root, fg_root
