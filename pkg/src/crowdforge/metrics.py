"""Removal-quality scoring: PSNR, in-mask PSNR, SSIM, and report tables.

PSNR pools squared error over all pixels, channels, and frames of a clip
(peak 255). Identical clips score infinite PSNR; infinities are flagged
and excluded from report averages rather than capped. Neural perceptual
metrics are delegated to an external scorer subprocess speaking a
line-oriented protocol.
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .clips import FrameSequence
from .errors import (
    EmptyInputError,
    ProtocolError,
    ScorerError,
    ShapeError,
    ValidationError,
)
from .filters import ssim
from .selection import NUM_BINS

METRIC_HIGHER_BETTER = {"psnr": True, "in_mask_psnr": True, "ssim": True}


@dataclass
class ClipScore:
    """Per-clip metric values; perceptual holds external scorer outputs."""

    clip_id: str
    psnr_db: float
    in_mask_psnr_db: float
    ssim: float
    crowd_bin: int
    perceptual: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not -1.0 <= self.ssim <= 1.0:
            raise ValidationError(f"ssim out of [-1, 1]: {self.ssim}")
        if not 0 <= self.crowd_bin < NUM_BINS:
            raise ValidationError(f"crowd_bin out of range: {self.crowd_bin}")


def _frames_of(x) -> np.ndarray:
    return x.frames if isinstance(x, FrameSequence) else np.asarray(x)


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB, MSE pooled over the whole clip."""
    fa = _frames_of(a).astype(np.float64)
    fb = _frames_of(b).astype(np.float64)
    if fa.shape != fb.shape:
        raise ShapeError(f"shapes disagree: {fa.shape} vs {fb.shape}")
    mse = float(((fa - fb) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def in_mask_psnr(a, b, mask_clip: np.ndarray) -> float:
    """PSNR restricted to masked pixels, isolating inpainting quality."""
    fa = _frames_of(a).astype(np.float64)
    fb = _frames_of(b).astype(np.float64)
    mask = np.asarray(mask_clip).astype(bool)
    if fa.shape != fb.shape:
        raise ShapeError(f"shapes disagree: {fa.shape} vs {fb.shape}")
    if mask.shape != fa.shape[:3]:
        raise ShapeError(f"mask {mask.shape} does not match clip {fa.shape[:3]}")
    if not mask.any():
        raise EmptyInputError("in-mask PSNR is undefined for an empty mask")
    diff2 = (fa - fb) ** 2
    mse = float(diff2[mask].mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def clip_ssim(a, b) -> float:
    """Mean per-frame SSIM over a clip."""
    fa = _frames_of(a)
    fb = _frames_of(b)
    if fa.shape != fb.shape:
        raise ShapeError(f"shapes disagree: {fa.shape} vs {fb.shape}")
    return float(np.mean([ssim(fa[t], fb[t]) for t in range(fa.shape[0])]))


def score_clip(clip_id: str, pred, gt, mask_clip: np.ndarray, crowd_bin: int) -> ClipScore:
    """All native metrics for one prediction/ground-truth pair."""
    return ClipScore(
        clip_id=clip_id,
        psnr_db=psnr(pred, gt),
        in_mask_psnr_db=in_mask_psnr(pred, gt, mask_clip),
        ssim=clip_ssim(pred, gt),
        crowd_bin=crowd_bin,
    )


@dataclass
class ScorerRun:
    """External scorer results plus any clips it failed to score."""

    scores: dict[str, float]
    missing: list[str]


def run_external_scorer(
    scorer_cmd: str | list[str], pairs: list[tuple[str, str, str]]
) -> ScorerRun:
    """Run a perceptual scorer subprocess over (clip_id, pred_dir, gt_dir) pairs.

    Wire protocol, line-oriented UTF-8 on stdin/stdout:
    request ``clip_id\\tpred_dir\\tgt_dir``, response ``clip_id\\tscore``.
    The scorer is spawned once for all pairs. A nonzero exit is a scorer
    error carrying its stderr; a malformed or duplicate response line is a
    protocol error naming the line.
    """
    argv = shlex.split(scorer_cmd) if isinstance(scorer_cmd, str) else list(scorer_cmd)
    request = "".join(f"{cid}\t{pred}\t{gt}\n" for cid, pred, gt in pairs)
    try:
        proc = subprocess.run(
            argv, input=request, capture_output=True, text=True, check=False
        )
    except OSError as e:
        raise ScorerError(f"could not start scorer {argv[0]!r}: {e}") from e
    if proc.returncode != 0:
        raise ScorerError(
            f"scorer exited with {proc.returncode}; stderr:\n{proc.stderr.strip()}"
        )

    requested = {cid for cid, _, _ in pairs}
    scores: dict[str, float] = {}
    for line in proc.stdout.splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ProtocolError(f"malformed scorer line: {line!r}")
        cid, raw = parts
        if cid not in requested:
            raise ProtocolError(f"scorer returned unrequested clip: {line!r}")
        if cid in scores:
            raise ProtocolError(f"duplicate clip_id in scorer output: {line!r}")
        try:
            scores[cid] = float(raw)
        except ValueError as e:
            raise ProtocolError(f"malformed scorer line: {line!r}") from e
    missing = sorted(requested - set(scores))
    return ScorerRun(scores=scores, missing=missing)


@dataclass
class ReportTable:
    """Per-Crowd%-bin and overall metric averages.

    ``per_bin[metric]`` holds one mean per bin (None for empty buckets);
    ``average[metric]`` pools every finite clip value. Infinite PSNRs are
    excluded from means and counted in ``infinite_counts``.
    """

    per_bin: dict[str, list[float | None]]
    average: dict[str, float | None]
    clip_counts: list[int]
    infinite_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "per_bin": self.per_bin,
            "average": self.average,
            "clip_counts": self.clip_counts,
            "infinite_counts": self.infinite_counts,
        }


_BIN_LABELS = ["0-10%", "10-20%", "20-30%", "30-40%", "40-50%"]


def _finite_mean(values: list[float]) -> float | None:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return None
    return sum(finite) / len(finite)


def build_report(scores: list[ClipScore]) -> ReportTable:
    """Aggregate clip scores into the per-Crowd%-bin table layout."""
    if not scores:
        raise EmptyInputError("no clip scores to report")

    metric_names = ["psnr", "in_mask_psnr", "ssim"]
    perceptual_names = sorted({name for s in scores for name in s.perceptual})
    metric_names.extend(perceptual_names)

    def values_of(s: ClipScore) -> dict[str, float | None]:
        base = {"psnr": s.psnr_db, "in_mask_psnr": s.in_mask_psnr_db, "ssim": s.ssim}
        for name in perceptual_names:
            base[name] = s.perceptual.get(name)
        return base

    per_bin: dict[str, list[float | None]] = {m: [] for m in metric_names}
    average: dict[str, float | None] = {}
    infinite_counts: dict[str, int] = {m: 0 for m in metric_names}
    clip_counts = []

    for k in range(NUM_BINS):
        bucket = [s for s in scores if s.crowd_bin == k]
        clip_counts.append(len(bucket))
        for m in metric_names:
            vals = [v for s in bucket if (v := values_of(s)[m]) is not None]
            per_bin[m].append(_finite_mean(vals))
    for m in metric_names:
        vals = [v for s in scores if (v := values_of(s)[m]) is not None]
        infinite_counts[m] = sum(1 for v in vals if math.isinf(v))
        average[m] = _finite_mean(vals)

    return ReportTable(
        per_bin=per_bin,
        average=average,
        clip_counts=clip_counts,
        infinite_counts=infinite_counts,
    )


def render_report(table: ReportTable) -> str:
    """Human-readable table: one metric per row, Crowd% bins + Average."""
    headers = ["Metric"] + _BIN_LABELS + ["Average"]
    rows = []
    for m, bin_means in table.per_bin.items():
        cells = [m]
        for v in bin_means + [table.average[m]]:
            cells.append("-" if v is None else f"{v:.4f}")
        rows.append(cells)
    rows.append(["clips"] + [str(c) for c in table.clip_counts] + [str(sum(table.clip_counts))])

    widths = [max(len(r[i]) for r in rows + [headers]) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    inf_total = sum(table.infinite_counts.values())
    if inf_total:
        noted = ", ".join(f"{m}: {n}" for m, n in table.infinite_counts.items() if n)
        lines.append(f"(infinite values excluded from means -- {noted})")
    return "\n".join(lines)
