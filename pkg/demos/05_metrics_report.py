"""Scoring removal outputs: PSNR, in-mask PSNR, SSIM, and the report table.

Also demonstrates the external perceptual-scorer protocol with a tiny
stub scorer (real LPIPS/DreamSim scorers are drop-in replacements that
speak the same stdin/stdout lines).
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from crowdforge import ClipScore
from crowdforge.metrics import (
    build_report,
    in_mask_psnr,
    psnr,
    render_report,
    run_external_scorer,
)

rng = np.random.default_rng(4)

gt = rng.integers(0, 256, (4, 48, 48, 3), dtype=np.uint8)
pred = np.clip(gt.astype(int) + rng.integers(-6, 7, gt.shape), 0, 255).astype(np.uint8)
mask = np.zeros((4, 48, 48), dtype=bool)
mask[:, 12:36, 12:36] = True

print(f"psnr          : {psnr(pred, gt):6.2f} dB")
print(f"in-mask psnr  : {in_mask_psnr(pred, gt, mask):6.2f} dB  (masked pixels only)")
print(f"psnr(gt, gt)  : {psnr(gt, gt)}  (flagged, excluded from averages)")

# --- external scorer protocol --------------------------------------------------
stub = Path(tempfile.mkdtemp()) / "stub_scorer.py"
stub.write_text(
    "import sys\n"
    "for line in sys.stdin:\n"
    "    clip_id, pred_dir, gt_dir = line.rstrip('\\n').split('\\t')\n"
    "    print(f'{clip_id}\\t{0.01 * len(clip_id):.4f}')\n"
)
pairs = [(f"clip{i}", f"/pred/clip{i}", f"/gt/clip{i}") for i in range(3)]
run = run_external_scorer(f"{sys.executable} {stub}", pairs)
print("\nstub scorer results:", run.scores, "missing:", run.missing)

# --- the per-Crowd% report ------------------------------------------------------
scores = []
for scene in range(7):
    for k in range(5):
        scores.append(
            ClipScore(
                clip_id=f"scene{scene}_bin{k}",
                psnr_db=float(rng.uniform(34 - 3 * k, 36 - 3 * k)),  # harder bins score lower
                in_mask_psnr_db=float(rng.uniform(20, 30)),
                ssim=float(rng.uniform(0.8, 0.99)),
                crowd_bin=k,
                perceptual={"stub": run.scores["clip0"]},
            )
        )
table = build_report(scores)
print("\n" + render_report(table))
