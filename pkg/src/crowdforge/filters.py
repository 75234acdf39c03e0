"""Background-clip admission tests.

Three gates decide whether a candidate background clip is usable: a mean
luminance band, adjacent-frame scene-transition detection (SSIM and
grayscale histogram correlation), and a tolerance on frames whose person
count exceeds a cap. All numeric work is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .clips import Frame, FrameSequence
from .errors import ConfigError, EmptyInputError, ShapeError, ValidationError

# SSIM reference constants and window.
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the background admission tests."""

    y_min: float = 50.0
    y_max: float = 200.0
    ssim_cut: float = 0.3
    hist_corr_cut: float = 0.5
    max_people: int = 5
    tolerance: float = 0.10

    def __post_init__(self):
        if not (0 <= self.y_min < self.y_max <= 255):
            raise ConfigError(f"need 0 <= y_min < y_max <= 255, got [{self.y_min}, {self.y_max}]")
        if not -1.0 <= self.ssim_cut <= 1.0:
            raise ConfigError(f"ssim_cut out of [-1, 1]: {self.ssim_cut}")
        if not -1.0 <= self.hist_corr_cut <= 1.0:
            raise ConfigError(f"hist_corr_cut out of [-1, 1]: {self.hist_corr_cut}")
        if self.max_people < 0:
            raise ConfigError(f"max_people must be >= 0, got {self.max_people}")
        if not 0.0 <= self.tolerance <= 1.0:
            raise ConfigError(f"tolerance out of [0, 1]: {self.tolerance}")


@dataclass(frozen=True)
class Histogram:
    """256-bin normalized grayscale histogram."""

    bins: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=np.float64)
        if b.shape != (256,):
            raise ValidationError(f"histogram must have 256 bins, got {b.shape}")
        if (b < 0).any():
            raise ValidationError("histogram bins must be nonnegative")
        if abs(b.sum() - 1.0) > 1e-9:
            raise ValidationError(f"histogram must sum to 1, got {b.sum()!r}")
        object.__setattr__(self, "bins", b)


@dataclass
class FilterVerdict:
    """Outcome of all background admission tests for one clip."""

    mean_luminance: float
    transition_indices: list[int]
    person_violation_fraction: float
    luminance_passed: bool
    transitions_passed: bool
    person_passed: bool

    @property
    def passed(self) -> bool:
        return self.luminance_passed and self.transitions_passed and self.person_passed


def luma(frame: Frame) -> np.ndarray:
    """Per-pixel BT.601 luma of an RGB frame, float64 in [0, 255].

    Computed elementwise (not as a BLAS dot product) so the rounding used
    for histogram binning is deterministic across platforms.
    """
    arr = np.asarray(frame)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.shape[-1] != 3:
        raise ShapeError(f"expected (..., 3) RGB frame, got {arr.shape}")
    arr = arr.astype(np.float64)
    return 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]


def mean_luminance(seq: FrameSequence) -> float:
    """Mean luma over all pixels of all frames."""
    if seq.frame_count == 0:
        raise EmptyInputError("empty frame sequence")
    return float(luma(seq.frames).mean())


def luminance_pass(y_bar: float, cfg: FilterConfig) -> bool:
    """Inclusive band test on the clip's mean luminance."""
    return cfg.y_min <= y_bar <= cfg.y_max


def _gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable windowed mean; cropping the window radius afterwards makes
    # the boundary mode irrelevant (valid-mode filtering).
    r = len(kernel) // 2
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[r:-r, r:-r]


def ssim(a: Frame, b: Frame) -> float:
    """Structural similarity between two frames on their grayscale versions.

    Gaussian 11x11 window (sigma 1.5), reference constants, global mean of
    the per-window map over the valid (fully interior) region.
    """
    x = luma(a)
    y = luma(b)
    if x.shape != y.shape:
        raise ShapeError(f"frame shapes differ: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ShapeError(f"frame {x.shape} smaller than the {SSIM_WINDOW}px SSIM window")

    g = _gaussian_kernel(SSIM_WINDOW // 2, SSIM_SIGMA)
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    var_x = _filter_valid(x * x, g) - mu_x * mu_x
    var_y = _filter_valid(y * y, g) - mu_y * mu_y
    cov_xy = _filter_valid(x * y, g) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov_xy + SSIM_C2)
    den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float((num / den).mean())


def grayscale_histogram(frame: Frame) -> Histogram:
    """Normalized 256-bin histogram of the frame's luma (round half up)."""
    gray = np.floor(luma(frame) + 0.5).astype(np.int64)
    np.clip(gray, 0, 255, out=gray)
    counts = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    return Histogram(counts / counts.sum())


def histogram_correlation(a: Frame, b: Frame) -> float:
    """Pearson correlation between the two frames' normalized histograms.

    Identical histograms give exactly 1.0; a zero-variance histogram against
    a different one gives 0.0 (no correlation is defined there).
    """
    ha = grayscale_histogram(a).bins
    hb = grayscale_histogram(b).bins
    if np.array_equal(ha, hb):
        return 1.0
    da = ha - ha.mean()
    db = hb - hb.mean()
    var_a = float(da @ da)
    var_b = float(db @ db)
    if var_a == 0.0 or var_b == 0.0:
        return 0.0
    return float((da @ db) / np.sqrt(var_a * var_b))


def detect_scene_transitions(seq: FrameSequence, cfg: FilterConfig) -> list[int]:
    """Indices t where frame t -> t+1 looks like a hard scene change.

    A transition is flagged when adjacent-frame SSIM falls below
    ``cfg.ssim_cut`` or histogram correlation below ``cfg.hist_corr_cut``.
    A clip passes the gate iff the returned list is empty.
    """
    flagged = []
    for t in range(seq.frame_count - 1):
        if ssim(seq.frames[t], seq.frames[t + 1]) < cfg.ssim_cut:
            flagged.append(t)
        elif histogram_correlation(seq.frames[t], seq.frames[t + 1]) < cfg.hist_corr_cut:
            flagged.append(t)
    return flagged


def person_count_pass(counts: list[int], cfg: FilterConfig) -> tuple[bool, float]:
    """Tolerance test on frames whose person count exceeds the cap.

    Returns (passed, violating fraction). The clip passes iff the fraction
    of frames with count strictly above ``cfg.max_people`` is strictly less
    than ``cfg.tolerance``.
    """
    arr = np.asarray(counts, dtype=np.int64)
    if arr.size == 0:
        raise EmptyInputError("empty person-count list")
    if (arr < 0).any():
        raise ValidationError("person counts must be nonnegative")
    fraction = float((arr > cfg.max_people).mean())
    return fraction < cfg.tolerance, fraction


def evaluate_background(
    seq: FrameSequence, person_counts: list[int], cfg: FilterConfig
) -> FilterVerdict:
    """Run all three admission tests on one candidate background clip."""
    if len(person_counts) != seq.frame_count:
        raise ValidationError(
            f"{len(person_counts)} person counts for a {seq.frame_count}-frame clip"
        )
    y_bar = mean_luminance(seq)
    transitions = detect_scene_transitions(seq, cfg)
    person_ok, fraction = person_count_pass(person_counts, cfg)
    return FilterVerdict(
        mean_luminance=y_bar,
        transition_indices=transitions,
        person_violation_fraction=fraction,
        luminance_passed=luminance_pass(y_bar, cfg),
        transitions_passed=not transitions,
        person_passed=person_ok,
    )
