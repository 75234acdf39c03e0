"""Shadow synthesis, from pivot to soft map.

Each instance mask is anchored at its ground-contact pivot, warped by a
pivot-fixed affine (conditional flip, rotation, shear, vertical squash),
and blurred into a soft shadow. Writes PNG visualizations next to this
script under demo_output/.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from crowdforge import ShadowParams, ShadowSamplerConfig
from crowdforge.shadows import (
    build_shadow_affine,
    estimate_pivot,
    sample_shadow_params,
    soften,
    warp_mask,
)

out_dir = Path(__file__).parent / "demo_output" / "shadows"
out_dir.mkdir(parents=True, exist_ok=True)

# A person-ish blob: torso + head
H = W = 160
mask = np.zeros((H, W), dtype=bool)
mask[60:130, 70:95] = True
yy, xx = np.mgrid[0:H, 0:W]
mask |= (yy - 50) ** 2 + (xx - 82) ** 2 < 14**2

pivot = estimate_pivot(mask)
print(f"pivot (ground contact): x={pivot.x:.1f}, y={pivot.y:.1f}")

# One sampled draw vs a sweep of directions
cfg = ShadowSamplerConfig(frame_height=H)
params = sample_shadow_params(clip_seed=7, cfg=cfg)
print("sampled params:", params)

for theta in (20.0, 70.0, 90.0, 150.0):
    p = ShadowParams(theta=theta, s_x=0.25, s_y=0.9, alpha=0.6, sigma=cfg.sigma())
    matrix = build_shadow_affine(p, pivot)
    hard = warp_mask(mask, matrix)
    soft = soften(hard, p.sigma)
    det = np.linalg.det(matrix[:, :2])
    print(
        f"theta={theta:5.1f} deg: flip={'yes' if theta >= 90 else 'no '} "
        f"det={det:+.3f} shadow px={int(hard.sum())}"
    )
    canvas = np.full((H, W), 255.0)
    canvas *= 1.0 - p.alpha * soft          # darken by the soft shadow
    canvas[mask] = 40.0                     # the person silhouette on top
    Image.fromarray(canvas.astype(np.uint8)).save(out_dir / f"shadow_theta{int(theta):03d}.png")

print(f"\nwrote {len(list(out_dir.glob('*.png')))} visualizations to {out_dir}")
