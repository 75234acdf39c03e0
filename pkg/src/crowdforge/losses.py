"""Standalone numerics for the fine-tuning objective.

The objective combines a base denoising loss (mean squared noise residual
per frame) with a motion sub-loss that penalizes the temporal derivative
of the residual, mixed by a convex ratio. Squared norms are normalized per
element and averaged over frames (or frame pairs), so values are scale
comparable across clip lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, ValidationError


@dataclass
class NoiseResidualClip:
    """Predicted and ground-truth noise arrays, one leading frame axis."""

    eps_hat: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.eps_hat = np.asarray(self.eps_hat, dtype=np.float64)
        self.eps = np.asarray(self.eps, dtype=np.float64)
        if self.eps_hat.shape != self.eps.shape:
            raise ShapeError(
                f"eps_hat {self.eps_hat.shape} vs eps {self.eps.shape}"
            )
        if self.eps_hat.ndim < 1 or self.eps_hat.shape[0] < 1:
            raise ValidationError("clip needs at least one frame")

    @property
    def frame_count(self) -> int:
        return self.eps_hat.shape[0]


@dataclass(frozen=True)
class LossConfig:
    """Motion sub-loss mixing ratio."""

    alpha_sub: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.alpha_sub <= 1.0:
            raise ConfigError(f"alpha_sub out of [0, 1]: {self.alpha_sub}")


def base_loss(clip: NoiseResidualClip) -> float:
    """Frame-mean of the per-element mean squared noise residual."""
    return float(((clip.eps_hat - clip.eps) ** 2).mean())


def motion_sub_loss(clip: NoiseResidualClip) -> float:
    """Mean squared temporal-difference residual over adjacent frame pairs.

    Zero for single-frame clips (no adjacent pairs) and for any residual
    that is constant in time.
    """
    if clip.frame_count == 1:
        return 0.0
    d = np.diff(clip.eps_hat, axis=0) - np.diff(clip.eps, axis=0)
    return float((d**2).mean())


def combined_loss(clip: NoiseResidualClip, cfg: LossConfig = LossConfig()) -> float:
    """Convex combination (1 - alpha) * base + alpha * motion."""
    a = cfg.alpha_sub
    return (1.0 - a) * base_loss(clip) + a * motion_sub_loss(clip)


def combined_loss_grad(clip: NoiseResidualClip, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Closed-form gradient of combined_loss w.r.t. eps_hat."""
    t = clip.frame_count
    n = clip.eps_hat[0].size
    grad = (1.0 - cfg.alpha_sub) * 2.0 * (clip.eps_hat - clip.eps) / (t * n)
    if t > 1 and cfg.alpha_sub > 0.0:
        d = np.diff(clip.eps_hat, axis=0) - np.diff(clip.eps, axis=0)
        sub = np.zeros_like(clip.eps_hat)
        # d_t couples frames t and t+1 with opposite signs
        sub[:-1] -= d
        sub[1:] += d
        grad += cfg.alpha_sub * 2.0 * sub / ((t - 1) * n)
    return grad


def finite_diff_grad_check(
    clip: NoiseResidualClip, cfg: LossConfig = LossConfig(), h: float = 1e-4
) -> float:
    """Max relative error of the analytic gradient vs central differences."""
    if h <= 0:
        raise ConfigError(f"h must be positive, got {h}")
    analytic = combined_loss_grad(clip, cfg)
    flat_hat = clip.eps_hat.ravel()
    max_rel = 0.0
    for i in range(flat_hat.size):
        bumped = flat_hat.copy()
        bumped[i] += h
        plus = combined_loss(
            NoiseResidualClip(bumped.reshape(clip.eps_hat.shape), clip.eps), cfg
        )
        bumped[i] -= 2.0 * h
        minus = combined_loss(
            NoiseResidualClip(bumped.reshape(clip.eps_hat.shape), clip.eps), cfg
        )
        fd = (plus - minus) / (2.0 * h)
        a = analytic.ravel()[i]
        rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        max_rel = max(max_rel, rel)
    return max_rel
