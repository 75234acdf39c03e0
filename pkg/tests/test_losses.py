import numpy as np
import pytest

from crowdforge.errors import ConfigError, ShapeError
from crowdforge.losses import (
    LossConfig,
    NoiseResidualClip,
    base_loss,
    combined_loss,
    combined_loss_grad,
    finite_diff_grad_check,
    motion_sub_loss,
)

from oracles import base_loss_reference, motion_sub_loss_reference


def _random_clip(rng, t, shape=(2, 3)):
    return NoiseResidualClip(
        eps_hat=rng.standard_normal((t, *shape)),
        eps=rng.standard_normal((t, *shape)),
    )


class TestBaseLoss:
    def test_zero_at_optimum(self, rng):
        eps = rng.standard_normal((3, 4))
        assert base_loss(NoiseResidualClip(eps_hat=eps.copy(), eps=eps)) == 0.0

    def test_single_frame_unit_residual(self):
        clip = NoiseResidualClip(eps_hat=np.array([[1.0, 1.0]]), eps=np.array([[0.0, 0.0]]))
        assert base_loss(clip) == 1.0

    def test_matches_double_loop_reference(self, rng):
        for t in (1, 2, 5):
            clip = _random_clip(rng, t)
            assert base_loss(clip) == pytest.approx(
                base_loss_reference(clip.eps_hat, clip.eps), abs=1e-12
            )

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            NoiseResidualClip(eps_hat=np.zeros((2, 3)), eps=np.zeros((2, 4)))


class TestMotionSubLoss:
    def test_zero_at_optimum(self, rng):
        eps = rng.standard_normal((4, 5))
        assert motion_sub_loss(NoiseResidualClip(eps_hat=eps.copy(), eps=eps)) == 0.0

    def test_time_constant_offset_is_invisible(self, rng):
        # Exactly-representable values make the telescoping exact in floats.
        eps = rng.integers(-8, 8, (5, 3, 2)).astype(float)
        offset = rng.integers(-8, 8, (3, 2)).astype(float)
        clip = NoiseResidualClip(eps_hat=eps + offset, eps=eps)
        assert motion_sub_loss(clip) == 0.0

    def test_time_constant_offset_with_arbitrary_floats(self, rng):
        eps = rng.standard_normal((5, 3, 2))
        offset = rng.standard_normal((3, 2))
        clip = NoiseResidualClip(eps_hat=eps + offset, eps=eps)
        assert motion_sub_loss(clip) < 1e-28  # rounding noise only

    def test_single_frame_is_zero(self, rng):
        assert motion_sub_loss(_random_clip(rng, 1)) == 0.0

    def test_matches_reference_t3(self, rng):
        clip = _random_clip(rng, 3)
        assert motion_sub_loss(clip) == pytest.approx(
            motion_sub_loss_reference(clip.eps_hat, clip.eps), abs=1e-12
        )


class TestCombinedLoss:
    def test_endpoints(self, rng):
        clip = _random_clip(rng, 4)
        assert combined_loss(clip, LossConfig(alpha_sub=0.0)) == base_loss(clip)
        assert combined_loss(clip, LossConfig(alpha_sub=1.0)) == motion_sub_loss(clip)

    def test_quarter_mix_arithmetic(self, rng):
        # base 0.8, sub 0.4 at the default ratio 0.25 -> 0.7
        clip = _random_clip(rng, 4)
        b, s = base_loss(clip), motion_sub_loss(clip)
        expected = 0.75 * b + 0.25 * s
        assert combined_loss(clip) == pytest.approx(expected, abs=1e-15)
        assert LossConfig().alpha_sub == 0.25
        assert 0.75 * 0.8 + 0.25 * 0.4 == pytest.approx(0.7)

    def test_affine_in_alpha(self, rng):
        clip = _random_clip(rng, 3)
        b, s = base_loss(clip), motion_sub_loss(clip)
        for a in (0.1, 0.25, 0.5, 0.9):
            assert combined_loss(clip, LossConfig(alpha_sub=a)) == pytest.approx(
                (1 - a) * b + a * s, abs=1e-14
            )

    def test_nonnegative_and_zero_iff_equal(self, rng):
        clip = _random_clip(rng, 4)
        assert combined_loss(clip) > 0.0
        eps = rng.standard_normal((4, 2, 3))
        perfect = NoiseResidualClip(eps_hat=eps.copy(), eps=eps)
        assert combined_loss(perfect) == 0.0

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            LossConfig(alpha_sub=1.5)


class TestGradientCheck:
    def test_random_clips_all_lengths(self, rng):
        for t in (1, 2, 3, 8):
            for _ in range(5):
                clip = _random_clip(rng, t)
                assert finite_diff_grad_check(clip, LossConfig(), h=1e-4) < 1e-4

    def test_gradient_zero_at_optimum(self, rng):
        eps = rng.standard_normal((3, 2, 2))
        clip = NoiseResidualClip(eps_hat=eps.copy(), eps=eps)
        grad = combined_loss_grad(clip, LossConfig())
        assert np.abs(grad).max() == 0.0
        assert finite_diff_grad_check(clip, LossConfig(), h=1e-4) < 1e-4

    def test_alpha_zero_reduces_to_base_gradient(self, rng):
        clip = _random_clip(rng, 4)
        grad = combined_loss_grad(clip, LossConfig(alpha_sub=0.0))
        t, n = clip.frame_count, clip.eps_hat[0].size
        expected = 2.0 * (clip.eps_hat - clip.eps) / (t * n)
        assert np.allclose(grad, expected, atol=1e-15)

    def test_bad_step(self, rng):
        with pytest.raises(ConfigError):
            finite_diff_grad_check(_random_clip(rng, 2), h=0.0)
