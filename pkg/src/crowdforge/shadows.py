"""Rule-based shadow synthesis for composited foreground instances.

Each instance mask is anchored at a ground-contact pivot, warped by a
pivot-fixed affine (conditional horizontal flip, rotation, horizontal
shear, vertical squash), and the union across instances is blurred into a
soft shadow map in [0, 1]. One parameter draw is shared by the whole clip
so lighting stays consistent across frames and instances.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .clips import InstanceMaskSequence
from .errors import ConfigError, EmptyInputError, ValidationError


@dataclass(frozen=True)
class ShadowParams:
    """Per-clip shadow transform draw, shared by all frames and instances.

    theta is the shadow direction in degrees in [0, 180); s_x the horizontal
    shear, s_y the vertical scale, alpha the darkening strength, sigma the
    blur std in pixels. Bounds here are physical-validity bounds; the
    sampler draws from the narrower configured ranges.
    """

    theta: float
    s_x: float
    s_y: float
    alpha: float
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.theta < 180.0:
            raise ValidationError(f"theta out of [0, 180): {self.theta}")
        if self.s_x < 0.0:
            raise ValidationError(f"s_x must be >= 0: {self.s_x}")
        if not 0.0 < self.s_y <= 1.0:
            raise ValidationError(f"s_y out of (0, 1]: {self.s_y}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha out of [0, 1]: {self.alpha}")
        if self.sigma <= 0.0:
            raise ValidationError(f"sigma must be positive: {self.sigma}")


@dataclass(frozen=True)
class Pivot:
    """Estimated ground-contact point of an instance, in pixel coordinates."""

    x: float
    y: float


@dataclass
class SoftShadowMap:
    """Per-frame shadow opacity rasters, clamped to [0, 1]."""

    maps: np.ndarray  # (T, H, W) float64

    def __post_init__(self):
        m = np.asarray(self.maps, dtype=np.float64)
        if m.ndim != 3:
            raise ValidationError(f"shadow maps must be (T,H,W), got {m.shape}")
        if m.min() < 0.0 or m.max() > 1.0:
            raise ValidationError("shadow map values must lie in [0, 1]")
        self.maps = m

    @property
    def frame_count(self) -> int:
        return self.maps.shape[0]


@dataclass(frozen=True)
class ShadowSamplerConfig:
    """Uniform sampling ranges for the per-clip shadow draw.

    sigma is not sampled: it scales with the frame height so softness stays
    resolution-proportional.
    """

    theta_range: tuple[float, float] = (0.0, 180.0)
    s_x_range: tuple[float, float] = (0.15, 0.35)
    s_y_range: tuple[float, float] = (0.8, 0.95)
    alpha_range: tuple[float, float] = (0.2, 0.8)
    frame_height: int = 720

    def sigma(self) -> float:
        return max(1.0, 0.01 * self.frame_height)


def estimate_pivot(mask: np.ndarray) -> Pivot:
    """Midpoint of the mask's lowest occupied row (ground-contact proxy)."""
    mask = np.asarray(mask).astype(bool)
    rows = np.nonzero(mask.any(axis=1))[0]
    if rows.size == 0:
        raise EmptyInputError("cannot estimate a pivot for an empty mask")
    y = int(rows[-1])
    cols = np.nonzero(mask[y])[0]
    return Pivot(x=float(cols.mean()), y=float(y))


def sample_shadow_params(clip_seed: int, cfg: ShadowSamplerConfig) -> ShadowParams:
    """Deterministic per-clip parameter draw from the configured ranges.

    Draw order is fixed (theta, s_x, s_y, alpha) so a seed always maps to
    the same parameters.
    """
    rng = random.Random(clip_seed)
    return ShadowParams(
        theta=rng.uniform(*cfg.theta_range),
        s_x=rng.uniform(*cfg.s_x_range),
        s_y=rng.uniform(*cfg.s_y_range),
        alpha=rng.uniform(*cfg.alpha_range),
        sigma=cfg.sigma(),
    )


def build_shadow_affine(params: ShadowParams, pivot: Pivot) -> np.ndarray:
    """2x3 affine fixing the pivot: flip (if theta >= 90), scale, shear, rotate.

    Composition is T(pivot) . R(theta_eff) . Shear_x(s_x) . Scale(1, s_y)
    . Flip_x^b . T(-pivot) with b = 1 iff theta >= 90 degrees and the
    rotation angle mirrored after a flip, so the visual shadow direction
    sweeps the full half-plane.
    """
    flipped = params.theta >= 90.0
    theta_eff = math.radians(180.0 - params.theta if flipped else params.theta)
    c, s = math.cos(theta_eff), math.sin(theta_eff)
    rot = np.array([[c, -s], [s, c]])
    shear = np.array([[1.0, params.s_x], [0.0, 1.0]])
    scale = np.array([[1.0, 0.0], [0.0, params.s_y]])
    flip = np.array([[-1.0 if flipped else 1.0, 0.0], [0.0, 1.0]])

    linear = rot @ shear @ scale @ flip
    p = np.array([pivot.x, pivot.y])
    translation = p - linear @ p
    return np.hstack([linear, translation[:, None]])


def warp_mask(mask: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply an affine to a binary mask by inverse-mapped nearest neighbor.

    Every output pixel center is mapped back through the inverse transform
    and takes the nearest source pixel; regions mapping outside the frame
    are clipped to zero. Output shares the input's grid.
    """
    mask = np.asarray(mask).astype(bool)
    h, w = mask.shape
    linear = matrix[:, :2]
    translation = matrix[:, 2]
    inv = np.linalg.inv(linear)

    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    sx = inv[0, 0] * (xs - translation[0]) + inv[0, 1] * (ys - translation[1])
    sy = inv[1, 0] * (xs - translation[0]) + inv[1, 1] * (ys - translation[1])
    ix = np.floor(sx + 0.5).astype(np.int64)
    iy = np.floor(sy + 0.5).astype(np.int64)

    valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    out = np.zeros_like(mask)
    out[valid] = mask[iy[valid], ix[valid]]
    return out


def soften(shadow: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-blur a binary shadow raster into a soft map in [0, 1].

    Separable normalized kernel with radius ceil(3 sigma) and clamp-to-edge
    handling, so an all-ones raster stays all ones.
    """
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = np.asarray(shadow, dtype=np.float64)
    out = correlate1d(out, kernel, axis=0, mode="nearest")
    out = correlate1d(out, kernel, axis=1, mode="nearest")
    return np.clip(out, 0.0, 1.0)


def render_clip_shadows(
    masks: InstanceMaskSequence,
    params: ShadowParams,
    frame_shape: tuple[int, int] | None = None,
) -> SoftShadowMap:
    """Soft shadow maps for a whole clip under one fixed parameter draw.

    Per frame: each instance is pivoted and warped independently, the
    warped silhouettes are combined by per-pixel max (overlapping shadows
    do not double-darken), and the union is blurred.
    """
    if frame_shape is None:
        frame_shape = masks.mask_shape()
    maps = np.zeros((masks.frame_count, *frame_shape), dtype=np.float64)
    for t in range(masks.frame_count):
        union = np.zeros(frame_shape, dtype=bool)
        for iid in sorted(masks.masks[t]):
            m = masks.masks[t][iid]
            if not m.any():
                continue
            matrix = build_shadow_affine(params, estimate_pivot(m))
            union |= warp_mask(m, matrix)
        if union.any():
            maps[t] = soften(union, params.sigma)
    return SoftShadowMap(maps=maps)
