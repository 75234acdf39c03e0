"""Foreground clip selection: validity, Crowd% binning, stratified sampling.

A clip is valid when at least M frames carry a mask; valid clips are
binned by mean union-mask coverage and sampled per bin with a fixed quota.
"""

import numpy as np

from crowdforge import InstanceMaskSequence, SelectionConfig
from crowdforge.selection import (
    assign_bin,
    compute_crowd_stats,
    stratified_sample,
)

H = W = 64
AREA = H * W


def walking_person(coverage_frac, frames=16):
    """One instance whose rectangle covers ~coverage_frac of each frame."""
    height = 40
    width = max(1, round(coverage_frac * AREA / height))
    masks = []
    for t in range(frames):
        m = np.zeros((H, W), dtype=bool)
        x = min(2 + t, W - width - 1)
        m[20 : 20 + height, x : x + width] = True
        masks.append({1: m})
    return InstanceMaskSequence(masks=masks, labels={1: "person"}, frame_shape=(H, W))


print("coverage -> stats")
for frac in (0.03, 0.12, 0.27, 0.44, 0.61):
    stats = compute_crowd_stats(walking_person(frac), AREA)
    print(
        f"  target {frac:4.0%}: crowd_percent={stats.crowd_percent:5.2f} "
        f"bin={stats.crowd_bin} masked_frames={stats.masked_frame_count}"
    )
print("(bin None means above 50%: the clip is excluded)")

print("\nbin boundaries are half-open:", [assign_bin(v) for v in (9.999, 10.0, 50.0, 50.001)])

# --- stratified sampling ------------------------------------------------------
rng = np.random.default_rng(1)
candidates = []
for k in range(5):
    n = int(rng.integers(120, 400))
    candidates.extend((f"clip_bin{k}_{i:04d}", k) for i in range(n))
rng.shuffle(candidates)

cfg = SelectionConfig(min_masked_frames=11, n_per_bin=200, seed=42)
report = stratified_sample(candidates, cfg)
print(f"\nsampled {len(report.selected)} clips from {len(candidates)} candidates")
for k in range(5):
    line = f"  bin {k}: {len(report.per_bin[k])} selected"
    if k in report.shortfalls:
        line += f" (short by {report.shortfalls[k]})"
    print(line)

again = stratified_sample(sorted(candidates), cfg)
print("\nsame seed, shuffled candidates -> identical selection:", again.selected == report.selected)
