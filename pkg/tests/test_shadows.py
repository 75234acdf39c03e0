
import numpy as np
import pytest

from crowdforge.clips import InstanceMaskSequence
from crowdforge.errors import ConfigError, EmptyInputError, ValidationError
from crowdforge.shadows import (
    Pivot,
    ShadowParams,
    ShadowSamplerConfig,
    build_shadow_affine,
    estimate_pivot,
    render_clip_shadows,
    sample_shadow_params,
    soften,
    warp_mask,
)

from conftest import rect_mask
from oracles import gaussian_kernel_2d_reference


def _params(theta=0.0, s_x=0.0, s_y=1.0, alpha=0.5, sigma=2.0):
    return ShadowParams(theta=theta, s_x=s_x, s_y=s_y, alpha=alpha, sigma=sigma)


class TestEstimatePivot:
    def test_filled_rectangle(self):
        mask = rect_mask(40, 60, 10, 30, 11, 21)  # rows 10..20, cols 30..50
        assert estimate_pivot(mask) == Pivot(x=40.0, y=20.0)

    def test_single_pixel(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[13, 7] = True
        assert estimate_pivot(mask) == Pivot(x=7.0, y=13.0)

    def test_l_shape_bottom_row(self):
        mask = np.zeros((120, 120), dtype=bool)
        mask[50:100, 0:3] = True
        mask[99, 0:10] = True
        assert estimate_pivot(mask) == Pivot(x=4.5, y=99.0)

    def test_empty_mask(self):
        with pytest.raises(EmptyInputError):
            estimate_pivot(np.zeros((5, 5), dtype=bool))


class TestSampleShadowParams:
    def test_deterministic(self):
        cfg = ShadowSamplerConfig()
        assert sample_shadow_params(1234, cfg) == sample_shadow_params(1234, cfg)

    def test_monte_carlo_ranges(self):
        cfg = ShadowSamplerConfig()
        draws = [sample_shadow_params(seed, cfg) for seed in range(10_000)]
        s_x = np.array([p.s_x for p in draws])
        assert s_x.min() >= 0.15 and s_x.max() <= 0.35
        assert abs(s_x.mean() - 0.25) < 0.005
        assert all(0.2 <= p.alpha <= 0.8 for p in draws)
        assert all(0.0 <= p.theta < 180.0 for p in draws)
        assert all(0.8 <= p.s_y <= 0.95 for p in draws)

    def test_sigma_scales_with_frame_height(self):
        assert ShadowSamplerConfig(frame_height=720).sigma() == pytest.approx(7.2)
        assert ShadowSamplerConfig(frame_height=64).sigma() == 1.0

    def test_params_validation(self):
        with pytest.raises(ValidationError):
            _params(theta=180.0)
        with pytest.raises(ValidationError):
            _params(s_y=0.0)
        with pytest.raises(ValidationError):
            _params(sigma=0.0)


class TestBuildShadowAffine:
    def test_identity_composition(self):
        m = build_shadow_affine(_params(theta=0.0, s_x=0.0, s_y=1.0), Pivot(10.0, 20.0))
        assert np.allclose(m, np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), atol=1e-12)

    def test_pivot_is_fixed_point(self, rng):
        for _ in range(1000):
            p = _params(
                theta=rng.uniform(0, 180),
                s_x=rng.uniform(0.15, 0.35),
                s_y=rng.uniform(0.8, 0.95),
            )
            pivot = Pivot(rng.uniform(0, 500), rng.uniform(0, 500))
            m = build_shadow_affine(p, pivot)
            moved = m[:, :2] @ np.array([pivot.x, pivot.y]) + m[:, 2]
            assert np.abs(moved - [pivot.x, pivot.y]).max() < 1e-9

    def test_determinant_is_signed_s_y(self, rng):
        for _ in range(200):
            s_y = rng.uniform(0.8, 0.95)
            theta = rng.uniform(0, 180)
            p = _params(theta=theta, s_x=rng.uniform(0.15, 0.35), s_y=s_y)
            det = np.linalg.det(build_shadow_affine(p, Pivot(0, 0))[:, :2])
            assert abs(abs(det) - s_y) < 1e-12
            assert (det < 0) == (theta >= 90.0)

    def test_flip_engages_exactly_at_90(self):
        pivot = Pivot(5.0, 5.0)
        just_below = build_shadow_affine(_params(theta=89.99999, s_x=0.2, s_y=0.9), pivot)
        at_90 = build_shadow_affine(_params(theta=90.0, s_x=0.2, s_y=0.9), pivot)
        assert np.linalg.det(just_below[:, :2]) > 0
        assert np.linalg.det(at_90[:, :2]) < 0


class TestWarpMask:
    def test_identity_bit_exact(self, rng):
        mask = rng.random((30, 40)) > 0.5
        identity = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert np.array_equal(warp_mask(mask, identity), mask)

    def test_pure_translation_clips_at_edge(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[4, 6:9] = True
        shift = np.array([[1.0, 0.0, 5.0], [0.0, 1.0, 0.0]])
        out = warp_mask(mask, shift)
        # columns 6,7,8 move to 11,12,13 -> all outside a 10-wide frame
        assert out.sum() == 0
        mask2 = np.zeros((10, 10), dtype=bool)
        mask2[4, 1:4] = True
        out2 = warp_mask(mask2, shift)
        assert np.array_equal(np.nonzero(out2[4])[0], np.array([6, 7, 8]))

    def test_vertical_scale_area_ratio(self):
        frame = np.zeros((400, 400), dtype=bool)
        frame[100:200, 100:200] = True
        pivot = estimate_pivot(frame)
        m = build_shadow_affine(_params(theta=0.0, s_x=0.0, s_y=0.9), pivot)
        out = warp_mask(frame, m)
        ratio = out.sum() / frame.sum()
        assert 0.88 <= ratio <= 0.92

    def test_random_params_area_matches_determinant(self, rng):
        frame = np.zeros((400, 400), dtype=bool)
        frame[150:250, 150:250] = True
        pivot = estimate_pivot(frame)
        for _ in range(20):
            p = _params(
                theta=rng.uniform(0, 180),
                s_x=rng.uniform(0.15, 0.35),
                s_y=rng.uniform(0.8, 0.95),
            )
            out = warp_mask(frame, build_shadow_affine(p, pivot))
            ratio = out.sum() / frame.sum()
            assert abs(ratio - p.s_y) < 0.05 * p.s_y


class TestSoften:
    def test_zero_map_stays_zero(self):
        out = soften(np.zeros((20, 20)), sigma=2.0)
        assert (out == 0).all()

    def test_ones_map_stays_ones(self):
        out = soften(np.ones((20, 20)), sigma=2.0)
        assert np.abs(out - 1.0).max() < 1e-6

    def test_impulse_matches_direct_kernel(self):
        impulse = np.zeros((41, 41))
        impulse[20, 20] = 1.0
        out = soften(impulse, sigma=2.0)
        kernel = gaussian_kernel_2d_reference(2.0)
        assert out[20, 20] == pytest.approx(kernel[kernel.shape[0] // 2, kernel.shape[1] // 2], abs=1e-12)
        assert out.sum() == pytest.approx(1.0, abs=1e-6)

    def test_bounds_never_widen(self, rng):
        raster = (rng.random((30, 30)) > 0.5).astype(float)
        out = soften(raster, sigma=1.5)
        assert out.max() <= raster.max() + 1e-12
        assert out.min() >= raster.min() - 1e-12
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_bad_sigma(self):
        with pytest.raises(ConfigError):
            soften(np.zeros((5, 5)), sigma=0.0)


class TestRenderClipShadows:
    def test_zero_instances_zero_map(self):
        seq = InstanceMaskSequence(masks=[{}, {}], frame_shape=(16, 16))
        out = render_clip_shadows(seq, _params(), frame_shape=(16, 16))
        assert out.maps.shape == (2, 16, 16)
        assert (out.maps == 0).all()

    def test_static_instance_constant_across_frames(self):
        mask = rect_mask(32, 32, 5, 10, 10, 6)
        seq = InstanceMaskSequence(masks=[{1: mask} for _ in range(4)])
        out = render_clip_shadows(seq, _params(theta=30.0, s_x=0.2, s_y=0.9))
        for t in range(1, 4):
            assert np.array_equal(out.maps[t], out.maps[0])

    def test_two_disjoint_instances_dominate_singletons(self):
        a = rect_mask(48, 48, 4, 6, 10, 5)
        b = rect_mask(48, 48, 30, 30, 10, 5)
        params = _params(theta=45.0, s_x=0.2, s_y=0.9)
        both = render_clip_shadows(InstanceMaskSequence(masks=[{1: a, 2: b}]), params)
        only_a = render_clip_shadows(InstanceMaskSequence(masks=[{1: a}]), params)
        only_b = render_clip_shadows(InstanceMaskSequence(masks=[{2: b}]), params)
        assert (both.maps >= only_a.maps - 1e-12).all()
        assert (both.maps >= only_b.maps - 1e-12).all()

    def test_deterministic(self):
        mask = rect_mask(32, 32, 5, 10, 12, 6)
        seq = InstanceMaskSequence(masks=[{1: mask}])
        params = _params(theta=120.0, s_x=0.3, s_y=0.85)
        first = render_clip_shadows(seq, params)
        second = render_clip_shadows(seq, params)
        assert np.array_equal(first.maps, second.maps)
