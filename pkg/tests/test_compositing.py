import numpy as np
import pytest

from crowdforge.clips import FrameSequence, InstanceMaskSequence
from crowdforge.compositing import (
    Triplet,
    apply_shadow,
    compose_triplet,
    load_triplet,
    mask_clip_of,
    overlay_foreground,
    write_triplet,
)
from crowdforge.errors import ShapeError, ValidationError
from crowdforge.selection import crowd_percent
from crowdforge.shadows import ShadowParams, render_clip_shadows

from conftest import random_clip, rect_mask


def _params(alpha=0.5):
    return ShadowParams(theta=40.0, s_x=0.2, s_y=0.9, alpha=alpha, sigma=1.5)


class TestApplyShadow:
    def test_zero_shadow_is_bit_exact_copy(self, rng):
        bg = rng.integers(0, 256, (12, 12, 3), dtype=np.uint8)
        out = apply_shadow(bg, np.zeros((12, 12)), alpha=0.8)
        assert np.array_equal(out, bg)

    def test_full_shadow_darkening_arithmetic(self):
        bg = np.full((4, 4, 3), 200, dtype=np.uint8)
        out = apply_shadow(bg, np.ones((4, 4)), alpha=0.8)
        assert (out == 40).all()  # 200 * (1 - 0.8)

    def test_stronger_alpha_darkens_more(self, rng):
        bg = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
        shadow = rng.random((16, 16))
        weak = apply_shadow(bg, shadow, alpha=0.2)
        strong = apply_shadow(bg, shadow, alpha=0.8)
        assert (weak.astype(int) >= strong.astype(int)).all()

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            apply_shadow(rng.integers(0, 256, (8, 8, 3), dtype=np.uint8), np.zeros((4, 4)), 0.5)


class TestOverlayForeground:
    def test_empty_and_full_masks(self, rng):
        a = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
        assert np.array_equal(overlay_foreground(a, b, np.zeros((10, 10), bool)), a)
        assert np.array_equal(overlay_foreground(a, b, np.ones((10, 10), bool)), b)

    def test_half_frame_select_matches_per_pixel_oracle(self, rng):
        a = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
        b = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
        mask = np.zeros((10, 10), dtype=bool)
        mask[:, :5] = True
        out = overlay_foreground(a, b, mask)
        for i in range(10):
            for j in range(10):
                expected = b[i, j] if mask[i, j] else a[i, j]
                assert (out[i, j] == expected).all()

    def test_shape_mismatch(self, rng):
        a = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        with pytest.raises(ShapeError):
            overlay_foreground(a, a, np.zeros((4, 4), bool))


def _toy_inputs(rng, t=3, h=24, w=24, with_instances=True):
    bg = random_clip(rng, t=t, h=h, w=w, clip_id="bg")
    fg = random_clip(rng, t=t, h=h, w=w, clip_id="fg")
    if with_instances:
        masks = []
        for step in range(t):
            person = rect_mask(h, w, 6, 4 + step, 12, 4)
            masks.append({1: person})
        seq = InstanceMaskSequence(masks=masks, labels={1: "person"}, frame_shape=(h, w))
    else:
        seq = InstanceMaskSequence(masks=[{} for _ in range(t)], frame_shape=(h, w))
    return bg, seq, fg


class TestComposeTriplet:
    def test_zero_instances_input_equals_gt(self, rng):
        bg, masks, fg = _toy_inputs(rng, with_instances=False)
        triplet = compose_triplet(bg, masks, fg, _params())
        assert np.array_equal(triplet.input.frames, triplet.gt.frames)
        assert not triplet.mask.any()

    def test_regions_partition(self, rng):
        bg, masks, fg = _toy_inputs(rng)
        params = _params(alpha=0.7)
        triplet = compose_triplet(bg, masks, fg, params)
        shadow = render_clip_shadows(masks, params, frame_shape=(bg.height, bg.width))
        for t in range(bg.frame_count):
            human = triplet.mask[t]
            shadowed = shadow.maps[t] > 0
            outside = ~(human | shadowed)
            assert np.array_equal(triplet.input.frames[t][outside], bg.frames[t][outside])
            assert np.array_equal(triplet.input.frames[t][human], fg.frames[t][human])
            shadow_only = shadowed & ~human
            assert (
                triplet.input.frames[t][shadow_only].astype(int)
                <= triplet.gt.frames[t][shadow_only].astype(int)
            ).all()

    def test_emitted_mask_preserves_crowd_percent(self, rng):
        bg, masks, fg = _toy_inputs(rng)
        triplet = compose_triplet(bg, masks, fg, _params())
        area = bg.height * bg.width
        emitted = InstanceMaskSequence(
            masks=[{1: triplet.mask[t]} if triplet.mask[t].any() else {} for t in range(bg.frame_count)],
            frame_shape=(bg.height, bg.width),
        )
        assert crowd_percent(emitted, area) == crowd_percent(masks, area)

    def test_deterministic(self, rng):
        bg, masks, fg = _toy_inputs(rng)
        a = compose_triplet(bg, masks, fg, _params())
        b = compose_triplet(bg, masks, fg, _params())
        assert np.array_equal(a.input.frames, b.input.frames)

    def test_misaligned_inputs(self, rng):
        bg, masks, fg = _toy_inputs(rng)
        short_fg = FrameSequence(frames=fg.frames[:2], fps=fg.fps, clip_id="fg")
        with pytest.raises(ShapeError):
            compose_triplet(bg, masks, short_fg, _params())

    def test_triplet_validation(self, rng):
        bg, masks, fg = _toy_inputs(rng)
        with pytest.raises(ValidationError):
            Triplet(input=bg, mask=np.zeros((2, 24, 24), dtype=bool), gt=bg)


class TestTripletIO:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        bg, masks, fg = _toy_inputs(rng, t=6)
        triplet = compose_triplet(bg, masks, fg, _params())
        write_triplet(triplet, tmp_path / "clip")
        loaded = load_triplet(tmp_path / "clip")
        assert np.array_equal(loaded.input.frames, triplet.input.frames)
        assert np.array_equal(loaded.mask, triplet.mask)
        assert np.array_equal(loaded.gt.frames, triplet.gt.frames)

    def test_refuses_overwrite_without_force(self, tmp_path, rng):
        bg, masks, fg = _toy_inputs(rng)
        triplet = compose_triplet(bg, masks, fg, _params())
        write_triplet(triplet, tmp_path / "clip")
        with pytest.raises(ValidationError):
            write_triplet(triplet, tmp_path / "clip")
        write_triplet(triplet, tmp_path / "clip", force=True)

    def test_layer_file_counts(self, tmp_path, rng):
        bg, masks, fg = _toy_inputs(rng, t=5)
        triplet = compose_triplet(bg, masks, fg, _params())
        write_triplet(triplet, tmp_path / "clip")
        for layer in ("input", "mask", "gt"):
            assert len(list((tmp_path / "clip" / layer).glob("*.png"))) == 5


def test_mask_clip_of_matches_unions(rng):
    _, masks, _ = _toy_inputs(rng)
    clip = mask_clip_of(masks, (24, 24))
    for t in range(masks.frame_count):
        assert np.array_equal(clip[t], masks.union_mask(t))
