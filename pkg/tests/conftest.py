import numpy as np
import pytest

from crowdforge.clips import FrameSequence, InstanceMaskSequence


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_frame(rng, h=32, w=32):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


def random_clip(rng, t=4, h=16, w=16, clip_id="clip"):
    frames = rng.integers(0, 256, (t, h, w, 3), dtype=np.uint8)
    return FrameSequence(frames=frames, fps=16.0, clip_id=clip_id)


def constant_clip(value, t=4, h=16, w=16, clip_id="clip"):
    frames = np.full((t, h, w, 3), value, dtype=np.uint8)
    return FrameSequence(frames=frames, fps=16.0, clip_id=clip_id)


def rect_mask(h, w, top, left, height, width):
    m = np.zeros((h, w), dtype=bool)
    m[top : top + height, left : left + width] = True
    return m


def single_instance_masks(mask, t):
    """One static instance repeated for t frames."""
    return InstanceMaskSequence(
        masks=[{1: mask.copy()} for _ in range(t)],
        labels={1: "person"},
        frame_shape=mask.shape,
    )
