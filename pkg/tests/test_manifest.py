import pytest

from crowdforge.clips import ClipSpan
from crowdforge.errors import ValidationError
from crowdforge.filters import FilterVerdict
from crowdforge.manifest import (
    DatasetManifest,
    ManifestEntry,
    ReviewDecision,
    read_manifest,
    write_manifest,
)
from crowdforge.selection import CrowdStats
from crowdforge.shadows import ShadowParams


def _sample_manifest():
    bg = ManifestEntry(
        clip_id="bg00_c000",
        role="background",
        source=ClipSpan("bg00", 0, 16),
        width=64,
        height=64,
        paths={"frames": "bg00/frames", "counts": "bg00/counts.json"},
        filter_verdict=FilterVerdict(
            mean_luminance=123.4,
            transition_indices=[3, 9],
            person_violation_fraction=0.0625,
            luminance_passed=True,
            transitions_passed=False,
            person_passed=True,
        ),
    )
    fg = ManifestEntry(
        clip_id="fg00_c000",
        role="foreground",
        source=ClipSpan("fg00", 0, 16),
        paths={"frames": "fg00/frames", "masks": "fg00/masks"},
        crowd=CrowdStats(masked_frame_count=16, crowd_percent=14.65, crowd_bin=1),
        selected=True,
    )
    comp = ManifestEntry(
        clip_id="fg00_c000__bg00_c000",
        role="composite",
        background_id="bg00_c000",
        foreground_id="fg00_c000",
        paths={"input": "clips/x/input", "mask": "clips/x/mask", "gt": "clips/x/gt"},
        crowd=fg.crowd,
        shadow_params=ShadowParams(theta=33.3, s_x=0.2, s_y=0.9, alpha=0.5, sigma=1.0),
        seed=1234567890123,
        review=ReviewDecision(
            clip_id="fg00_c000__bg00_c000",
            verdict="rejected",
            reasons=["floating_humans", "other"],
            note="feet hover",
            timestamp="2026-08-10T12:00:00+00:00",
        ),
    )
    return DatasetManifest(
        entries=[bg, fg, comp],
        clip_len=16,
        fps=16.0,
        background_root="/corpus/backgrounds",
        foreground_root="/corpus/foregrounds",
        stages_completed=["ingest", "filter-bg"],
    )


class TestRoundTrip:
    def test_field_for_field_identity(self, tmp_path):
        manifest = _sample_manifest()
        path = tmp_path / "manifest.json"
        write_manifest(manifest, path)
        assert read_manifest(path) == manifest

    def test_write_is_byte_deterministic(self, tmp_path):
        manifest = _sample_manifest()
        write_manifest(manifest, tmp_path / "a.json")
        write_manifest(manifest, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_double_round_trip_stable(self, tmp_path):
        manifest = _sample_manifest()
        p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
        write_manifest(manifest, p1)
        write_manifest(read_manifest(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestValidation:
    def test_duplicate_clip_id(self):
        e = ManifestEntry(clip_id="x", role="background")
        with pytest.raises(ValidationError):
            DatasetManifest(entries=[e, ManifestEntry(clip_id="x", role="foreground")])

    def test_composite_missing_reference(self):
        comp = ManifestEntry(
            clip_id="c",
            role="composite",
            background_id="nope",
            foreground_id="fg",
        )
        fg = ManifestEntry(clip_id="fg", role="foreground")
        with pytest.raises(ValidationError):
            DatasetManifest(entries=[fg, comp])

    def test_composite_requires_both_parents(self):
        with pytest.raises(ValidationError):
            ManifestEntry(clip_id="c", role="composite", background_id="b")

    def test_unknown_role(self):
        with pytest.raises(ValidationError):
            ManifestEntry(clip_id="x", role="wallpaper")


class TestReviewDecision:
    def test_rejection_requires_reason(self):
        with pytest.raises(ValidationError):
            ReviewDecision(clip_id="x", verdict="rejected", reasons=[])

    def test_accept_needs_no_reason(self):
        d = ReviewDecision(clip_id="x", verdict="accepted")
        assert d.reasons == []

    def test_unknown_verdict(self):
        with pytest.raises(ValidationError):
            ReviewDecision(clip_id="x", verdict="maybe")


def test_stage_tracking_sorted():
    m = DatasetManifest(entries=[])
    m.mark_stage("select-fg")
    m.mark_stage("ingest")
    m.mark_stage("select-fg")
    assert m.stages_completed == ["ingest", "select-fg"]
    assert m.stage_done("ingest") and not m.stage_done("compose")
