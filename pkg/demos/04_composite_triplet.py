"""Composite one supervised triplet and verify its exactness guarantees.

input = shadowed background with the foreground pasted at full opacity;
mask = union of instance masks (shadows excluded); gt = clean background.
Writes the triplet to demo_output/triplet/.
"""

from pathlib import Path

import numpy as np

from crowdforge import FrameSequence, InstanceMaskSequence, ShadowParams
from crowdforge.compositing import compose_triplet, write_triplet
from crowdforge.shadows import render_clip_shadows

rng = np.random.default_rng(3)
T, H, W = 8, 96, 128

# Background: smooth vertical gradient + texture. Foreground: same-size clip
# whose masked region is what gets pasted.
grad = np.linspace(90, 170, H)[:, None] + rng.integers(-12, 12, (H, W))
bg_frame = np.repeat(np.clip(grad, 0, 255).astype(np.uint8)[..., None], 3, axis=2)
bg = FrameSequence(frames=np.stack([bg_frame] * T), fps=16.0, clip_id="bg")

fg_frames = np.stack([bg_frame] * T).copy()
masks = []
for t in range(T):
    person = np.zeros((H, W), dtype=bool)
    x = 30 + 3 * t
    person[28:80, x : x + 14] = True
    fg_frames[t][person] = (180, 60, 50)  # a red-shirted walker
    masks.append({1: person})
fg = FrameSequence(frames=fg_frames, fps=16.0, clip_id="fg")
mask_seq = InstanceMaskSequence(masks=masks, labels={1: "person"}, frame_shape=(H, W))

params = ShadowParams(theta=35.0, s_x=0.25, s_y=0.9, alpha=0.55, sigma=2.0)
triplet = compose_triplet(bg, mask_seq, fg, params)

# The three exactness guarantees, checked on every frame:
shadow = render_clip_shadows(mask_seq, params, frame_shape=(H, W))
for t in range(T):
    human = triplet.mask[t]
    shadowed = shadow.maps[t] > 0
    untouched = ~(human | shadowed)
    assert np.array_equal(triplet.input.frames[t][untouched], triplet.gt.frames[t][untouched])
    assert np.array_equal(triplet.input.frames[t][human], fg.frames[t][human])
    assert (
        triplet.input.frames[t][shadowed & ~human].astype(int)
        <= triplet.gt.frames[t][shadowed & ~human].astype(int)
    ).all()
print("exactness checks hold: untouched==gt, masked==fg, shadow-only <= gt")

out_dir = Path(__file__).parent / "demo_output" / "triplet"
write_triplet(triplet, out_dir, force=True)
print(f"triplet written to {out_dir} (input/, mask/, gt/; {T} frames each)")
