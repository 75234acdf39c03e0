"""Foreground clip selection: mask coverage stats and stratified sampling.

A foreground clip is valid when enough of its frames carry at least one
instance mask. Valid clips are binned by Crowd% (mean union-mask area as a
percentage of the frame) and a fixed number is sampled per bin.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .clips import InstanceMaskSequence
from .errors import ConfigError, ValidationError
from .seeding import fnv1a64

BIN_WIDTH = 10.0
NUM_BINS = 5
MAX_CROWD_PERCENT = 50.0


def assign_bin(crowd_percent: float) -> int | None:
    """Map a Crowd% value to one of five bins, or None above the top bin.

    Bins are half-open [10k, 10(k+1)) except the last, which closes at 50
    so the bins partition [0, 50].
    """
    if crowd_percent < 0.0 or crowd_percent > 100.0:
        raise ValidationError(f"crowd_percent out of [0, 100]: {crowd_percent}")
    if crowd_percent > MAX_CROWD_PERCENT:
        return None
    if crowd_percent == MAX_CROWD_PERCENT:
        return NUM_BINS - 1
    return int(crowd_percent // BIN_WIDTH)


@dataclass(frozen=True)
class CrowdStats:
    """Mask coverage summary for one foreground clip."""

    masked_frame_count: int
    crowd_percent: float
    crowd_bin: int | None

    def __post_init__(self):
        if not 0.0 <= self.crowd_percent <= 100.0:
            raise ValidationError(f"crowd_percent out of range: {self.crowd_percent}")
        if self.crowd_bin != assign_bin(self.crowd_percent):
            raise ValidationError(
                f"crowd_bin {self.crowd_bin} inconsistent with "
                f"crowd_percent {self.crowd_percent}"
            )


@dataclass(frozen=True)
class SelectionConfig:
    """Foreground validity threshold and per-bin sampling quota."""

    min_masked_frames: int = 138
    n_per_bin: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.min_masked_frames < 1:
            raise ConfigError(f"min_masked_frames must be >= 1, got {self.min_masked_frames}")
        if self.n_per_bin < 1:
            raise ConfigError(f"n_per_bin must be >= 1, got {self.n_per_bin}")


def masked_frame_count(masks: InstanceMaskSequence) -> int:
    """Number of frames whose union mask has at least one set pixel."""
    count = 0
    for per_frame in masks.masks:
        if any(m.any() for m in per_frame.values()):
            count += 1
    return count


def crowd_percent(masks: InstanceMaskSequence, frame_area: int) -> float:
    """Mean union-mask area over all frames, as a percentage of frame area.

    Frames with no masks contribute zero; overlapping instances are counted
    once (the union is what is measured).
    """
    if frame_area <= 0:
        raise ValidationError(f"frame_area must be positive, got {frame_area}")
    total = 0
    for t in range(masks.frame_count):
        per_frame = masks.masks[t]
        if per_frame:
            total += int(masks.union_mask(t).sum())
    return 100.0 * total / (frame_area * masks.frame_count)


def compute_crowd_stats(masks: InstanceMaskSequence, frame_area: int) -> CrowdStats:
    pct = crowd_percent(masks, frame_area)
    return CrowdStats(
        masked_frame_count=masked_frame_count(masks),
        crowd_percent=pct,
        crowd_bin=assign_bin(pct),
    )


@dataclass
class SelectionReport:
    """Result of stratified sampling, including per-bin shortfalls."""

    selected: list[str]
    per_bin: dict[int, list[str]] = field(default_factory=dict)
    shortfalls: dict[int, int] = field(default_factory=dict)


def _bin_rng(seed: int, bin_index: int) -> random.Random:
    # Mersenne Twister streams are stable across Python versions, unlike
    # numpy Generator distribution methods.
    return random.Random(fnv1a64(f"stratified-bin-{bin_index}".encode()) ^ seed)


def stratified_sample(
    candidates: list[tuple[str, int]], cfg: SelectionConfig
) -> SelectionReport:
    """Sample up to ``n_per_bin`` clip ids per bin, uniformly without replacement.

    The result depends only on the candidate *set* and the seed: candidates
    are order-normalized by id before sampling, so shuffled input order
    yields the identical selection.
    """
    by_bin: dict[int, list[str]] = {k: [] for k in range(NUM_BINS)}
    for clip_id, bin_index in candidates:
        if bin_index not in by_bin:
            raise ValidationError(f"clip {clip_id}: bin {bin_index} out of range")
        by_bin[bin_index].append(clip_id)

    report = SelectionReport(selected=[])
    for k in range(NUM_BINS):
        pool = sorted(by_bin[k])
        take = min(cfg.n_per_bin, len(pool))
        chosen = sorted(_bin_rng(cfg.seed, k).sample(pool, take))
        report.per_bin[k] = chosen
        report.selected.extend(chosen)
        if take < cfg.n_per_bin:
            report.shortfalls[k] = cfg.n_per_bin - take
    return report
