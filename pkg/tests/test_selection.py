import pytest
from hypothesis import given, settings, strategies as st

from crowdforge.clips import InstanceMaskSequence
from crowdforge.errors import ConfigError, ValidationError
from crowdforge.selection import (
    CrowdStats,
    SelectionConfig,
    assign_bin,
    compute_crowd_stats,
    crowd_percent,
    masked_frame_count,
    stratified_sample,
)

from conftest import rect_mask


def _empty_masks(t, shape=(10, 10)):
    return InstanceMaskSequence(masks=[{} for _ in range(t)], frame_shape=shape)


class TestMaskedFrameCount:
    def test_all_empty(self):
        assert masked_frame_count(_empty_masks(5)) == 0

    def test_every_frame_masked(self):
        m = rect_mask(10, 10, 0, 0, 2, 2)
        seq = InstanceMaskSequence(masks=[{1: m} for _ in range(197)])
        assert masked_frame_count(seq) == 197

    def test_first_138_frames_meet_default_threshold(self):
        m = rect_mask(10, 10, 0, 0, 1, 1)
        masks = [{1: m} if t < 138 else {} for t in range(197)]
        seq = InstanceMaskSequence(masks=masks, frame_shape=(10, 10))
        count = masked_frame_count(seq)
        assert count == 138
        assert count >= SelectionConfig().min_masked_frames


class TestCrowdPercent:
    def test_no_masks(self):
        assert crowd_percent(_empty_masks(4), 100) == 0.0

    def test_half_coverage(self):
        m = rect_mask(10, 10, 0, 0, 5, 10)
        seq = InstanceMaskSequence(masks=[{1: m} for _ in range(3)])
        assert crowd_percent(seq, 100) == 50.0

    def test_mean_of_25_and_75(self):
        a = rect_mask(10, 10, 0, 0, 5, 5)
        b = rect_mask(10, 10, 0, 0, 5, 10) | rect_mask(10, 10, 5, 0, 5, 5)
        seq = InstanceMaskSequence(masks=[{1: a}, {1: b}])
        assert crowd_percent(seq, 100) == 50.0

    def test_union_counts_overlap_once(self):
        m = rect_mask(10, 10, 0, 0, 4, 4)
        whole = InstanceMaskSequence(masks=[{1: m}])
        split = InstanceMaskSequence(masks=[{1: m, 2: m}])  # fully overlapping
        assert crowd_percent(whole, 100) == crowd_percent(split, 100)

    def test_invariant_under_relabel_and_split(self):
        left = rect_mask(10, 10, 2, 0, 4, 3)
        right = rect_mask(10, 10, 2, 5, 4, 3)
        one = InstanceMaskSequence(masks=[{7: left | right}])
        two = InstanceMaskSequence(masks=[{1: left, 2: right}])
        assert crowd_percent(one, 100) == crowd_percent(two, 100)

    def test_monotone_in_added_pixels(self):
        small = rect_mask(10, 10, 0, 0, 2, 2)
        bigger = rect_mask(10, 10, 0, 0, 3, 3)
        a = InstanceMaskSequence(masks=[{1: small}])
        b = InstanceMaskSequence(masks=[{1: bigger}])
        assert crowd_percent(b, 100) >= crowd_percent(a, 100)

    def test_bad_area(self):
        with pytest.raises(ValidationError):
            crowd_percent(_empty_masks(1), 0)


class TestAssignBin:
    @pytest.mark.parametrize(
        "pct,expected",
        [
            (0.0, 0),
            (9.999, 0),
            (10.0, 1),
            (19.999, 1),
            (20.0, 2),
            (39.999, 3),
            (40.0, 4),
            (50.0, 4),
            (50.001, None),
            (100.0, None),
        ],
    )
    def test_boundaries(self, pct, expected):
        assert assign_bin(pct) == expected

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            assign_bin(-0.1)

    @given(st.floats(0.0, 50.0, allow_nan=False))
    def test_partition_of_valid_range(self, pct):
        k = assign_bin(pct)
        assert k is not None
        if pct < 50.0:
            assert 10.0 * k <= pct < 10.0 * (k + 1)

    def test_crowd_stats_consistency_enforced(self):
        with pytest.raises(ValidationError):
            CrowdStats(masked_frame_count=5, crowd_percent=15.0, crowd_bin=0)


class TestStratifiedSample:
    def _candidates(self, per_bin_counts):
        out = []
        for k, n in enumerate(per_bin_counts):
            out.extend((f"clip_b{k}_{i:04d}", k) for i in range(n))
        return out

    def test_full_quota(self):
        cands = self._candidates([300] * 5)
        report = stratified_sample(cands, SelectionConfig(n_per_bin=200, seed=42))
        assert len(report.selected) == 1000
        assert all(len(report.per_bin[k]) == 200 for k in range(5))
        assert report.shortfalls == {}

    def test_shortfall_reported(self):
        cands = self._candidates([150, 300, 300, 300, 300])
        report = stratified_sample(cands, SelectionConfig(n_per_bin=200, seed=42))
        assert len(report.per_bin[0]) == 150
        assert report.shortfalls == {0: 50}

    def test_order_invariance(self, rng):
        cands = self._candidates([40, 40, 40, 40, 40])
        cfg = SelectionConfig(n_per_bin=10, seed=7)
        shuffled = list(cands)
        rng.shuffle(shuffled)
        assert stratified_sample(cands, cfg).selected == stratified_sample(shuffled, cfg).selected

    def test_selection_is_subset_without_replacement(self):
        cands = self._candidates([25, 25, 25, 25, 25])
        report = stratified_sample(cands, SelectionConfig(n_per_bin=10, seed=1))
        ids = {c for c, _ in cands}
        assert set(report.selected) <= ids
        assert len(set(report.selected)) == len(report.selected)

    def test_seed_changes_selection(self):
        cands = self._candidates([50, 50, 50, 50, 50])
        a = stratified_sample(cands, SelectionConfig(n_per_bin=10, seed=1)).selected
        b = stratified_sample(cands, SelectionConfig(n_per_bin=10, seed=2)).selected
        assert a != b

    def test_invalid_bin_rejected(self):
        with pytest.raises(ValidationError):
            stratified_sample([("x", 5)], SelectionConfig(n_per_bin=1, seed=0))

    @given(
        counts=st.lists(st.integers(0, 30), min_size=5, max_size=5),
        n=st.integers(1, 25),
        seed=st.integers(0, 2**32),
    )
    @settings(max_examples=40)
    def test_per_bin_caps_hold(self, counts, n, seed):
        cands = self._candidates(counts)
        report = stratified_sample(cands, SelectionConfig(n_per_bin=n, seed=seed))
        for k in range(5):
            assert len(report.per_bin[k]) == min(n, counts[k])


def test_compute_crowd_stats_end_to_end():
    m = rect_mask(10, 10, 0, 0, 5, 5)  # 25% of a 100px frame
    seq = InstanceMaskSequence(masks=[{1: m} for _ in range(4)])
    stats = compute_crowd_stats(seq, 100)
    assert stats == CrowdStats(masked_frame_count=4, crowd_percent=25.0, crowd_bin=2)


def test_selection_config_validation():
    with pytest.raises(ConfigError):
        SelectionConfig(min_masked_frames=0)
    with pytest.raises(ConfigError):
        SelectionConfig(n_per_bin=0)
