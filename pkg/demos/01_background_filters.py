"""Background clip admission, step by step.

Three gates decide whether a candidate background clip is usable:
a mean-luminance band, adjacent-frame scene-transition detection,
and a tolerance on frames with too many people.
"""

import numpy as np

from crowdforge import FilterConfig, FrameSequence, evaluate_background
from crowdforge.filters import (
    detect_scene_transitions,
    histogram_correlation,
    mean_luminance,
    ssim,
)

cfg = FilterConfig()  # defaults: Y in [50,200], SSIM cut 0.3, rho cut 0.5, P=5, tau=10%
print("filter config:", cfg)

# --- a well-behaved clip: smooth texture panning one pixel per frame --------
# (raw per-pixel noise would decorrelate under a 1px shift and read as a cut)
rng = np.random.default_rng(0)
from crowdforge.shadows import soften  # separable Gaussian, handy for smoothing

noise = soften(rng.random((48, 64)), sigma=3.0)
texture = (60 + 120 * (noise - noise.min()) / np.ptp(noise)).astype(np.uint8)
good = FrameSequence(
    frames=np.stack([np.repeat(np.roll(texture, t, axis=1)[..., None], 3, axis=2) for t in range(24)]),
    fps=16.0,
    clip_id="steady_pan",
)
print(f"\nsteady pan clip: mean luminance {mean_luminance(good):.1f}")
print("transitions:", detect_scene_transitions(good, cfg))

# --- a clip with a hard cut --------------------------------------------------
frames = np.stack([good.frames[t] for t in range(24)])
frames[12:] = 235  # jump cut to a bright wall
cut = FrameSequence(frames=frames, fps=16.0, clip_id="jump_cut")
t = 11
print(f"\njump-cut clip: SSIM across the cut = {ssim(cut.frames[t], cut.frames[t+1]):.5f}")
print(f"histogram correlation across the cut = {histogram_correlation(cut.frames[t], cut.frames[t+1]):.5f}")
print("transitions:", detect_scene_transitions(cut, cfg))

# --- full verdicts with person counts ----------------------------------------
quiet_counts = [0, 1, 0, 2] * 6
crowded_counts = [7] * 8 + [2] * 16
for clip, counts in ((good, quiet_counts), (good, crowded_counts)):
    verdict = evaluate_background(clip, counts, cfg)
    print(
        f"\ncounts {counts[:10]}... -> luminance_ok={verdict.luminance_passed} "
        f"transitions_ok={verdict.transitions_passed} "
        f"people_ok={verdict.person_passed} (violating fraction "
        f"{verdict.person_violation_fraction:.3f}) => passed={verdict.passed}"
    )
