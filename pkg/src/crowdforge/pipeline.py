"""Stage orchestration: ingest, filter-bg, select-fg, compose, evaluate.

Every randomized choice is derived from the master seed and a clip id, so
the entire dataset is a pure function of (corpus bytes, config). Workers
only parallelize per-clip computation; results are folded back in sorted
clip-id order, so the worker count never changes the output.

Corpus layout expected under the two roots (one directory per source
video, frames produced by an external decoder):

    background_root/<source_id>/frames/frame_%05d.png
    background_root/<source_id>/counts.json          # per-frame person counts
    foreground_root/<source_id>/frames/frame_%05d.png
    foreground_root/<source_id>/masks/frame_%05d.png + masks/labels.json
"""

from __future__ import annotations

import json
import logging
import os
import random
import shlex
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from PIL import Image

from .clips import (
    ClipSpan,
    FrameSequence,
    InstanceMaskSequence,
    load_frame_sequence,
    load_instance_masks,
    segment_into_clips,
)
from .compositing import compose_triplet, load_triplet, write_triplet
from .errors import ConfigError, DependencyError, ValidationError
from .filters import FilterConfig, evaluate_background
from .manifest import DatasetManifest, ManifestEntry, read_manifest, write_manifest
from .metrics import (
    ReportTable,
    build_report,
    render_report,
    run_external_scorer,
    score_clip,
)
from .seeding import derive_clip_seed, fnv1a64
from .selection import SelectionConfig, compute_crowd_stats, stratified_sample
from .shadows import ShadowSamplerConfig, sample_shadow_params

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
CLIPS_DIRNAME = "clips"

STAGES = ("ingest", "filter-bg", "select-fg", "compose", "evaluate")
_STAGE_DEPS = {
    "ingest": (),
    "filter-bg": ("ingest",),
    "select-fg": ("ingest",),
    "compose": ("ingest", "filter-bg", "select-fg"),
    "evaluate": ("ingest", "filter-bg", "select-fg", "compose"),
}


@dataclass
class PipelineConfig:
    """Paths, stage parameters, and the master seed for one dataset build."""

    output_root: str
    background_root: str | None = None
    foreground_root: str | None = None
    clip_len: int = 197
    fps: float = 16.0
    filters: FilterConfig = field(default_factory=FilterConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    sampler: ShadowSamplerConfig = field(default_factory=ShadowSamplerConfig)
    master_seed: int = 0
    workers: int = 1
    test_source_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.clip_len < 1:
            raise ConfigError(f"clip_len must be >= 1, got {self.clip_len}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def manifest_path(self) -> Path:
        return Path(self.output_root) / MANIFEST_NAME

    def to_dict(self) -> dict:
        return {
            "output_root": self.output_root,
            "background_root": self.background_root,
            "foreground_root": self.foreground_root,
            "clip_len": self.clip_len,
            "fps": self.fps,
            "filters": vars(self.filters).copy(),
            "selection": vars(self.selection).copy(),
            "sampler": {
                "theta_range": list(self.sampler.theta_range),
                "s_x_range": list(self.sampler.s_x_range),
                "s_y_range": list(self.sampler.s_y_range),
                "alpha_range": list(self.sampler.alpha_range),
                "frame_height": self.sampler.frame_height,
            },
            "master_seed": self.master_seed,
            "workers": self.workers,
            "test_source_ids": list(self.test_source_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        sampler = d.get("sampler", {})
        return cls(
            output_root=d["output_root"],
            background_root=d.get("background_root"),
            foreground_root=d.get("foreground_root"),
            clip_len=d.get("clip_len", 197),
            fps=d.get("fps", 16.0),
            filters=FilterConfig(**d.get("filters", {})),
            selection=SelectionConfig(**d.get("selection", {})),
            sampler=ShadowSamplerConfig(
                theta_range=tuple(sampler.get("theta_range", (0.0, 180.0))),
                s_x_range=tuple(sampler.get("s_x_range", (0.15, 0.35))),
                s_y_range=tuple(sampler.get("s_y_range", (0.8, 0.95))),
                alpha_range=tuple(sampler.get("alpha_range", (0.2, 0.8))),
                frame_height=sampler.get("frame_height", 720),
            ),
            master_seed=d.get("master_seed", 0),
            workers=d.get("workers", 1),
            test_source_ids=list(d.get("test_source_ids", [])),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class StageReport:
    """Counts of what one stage did, with per-reason rejection totals."""

    stage: str
    processed: int = 0
    accepted: int = 0
    rejected: int = 0
    reasons: dict[str, int] = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def reject(self, reason: str, n: int = 1) -> None:
        self.rejected += n
        self.reasons[reason] = self.reasons.get(reason, 0) + n

    def summary(self) -> str:
        parts = [
            f"[{self.stage}] processed={self.processed}",
            f"accepted={self.accepted}",
            f"rejected={self.rejected}",
        ]
        if self.reasons:
            parts.append("(" + ", ".join(f"{k}={v}" for k, v in sorted(self.reasons.items())) + ")")
        return " ".join(parts)


# ---------------------------------------------------------------------------
# source loading helpers
# ---------------------------------------------------------------------------


class _SourceCache:
    """Loads each source video's frames/masks/counts at most once."""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._frames: dict[tuple[str, str], FrameSequence] = {}
        self._masks: dict[str, InstanceMaskSequence] = {}
        self._counts: dict[str, list[int]] = {}

    def _root(self, role: str) -> Path:
        root = (
            self.manifest.background_root
            if role == "background"
            else self.manifest.foreground_root
        )
        if not root:
            raise ConfigError(f"manifest has no {role} root recorded")
        return Path(root)

    def frames(self, role: str, source_id: str) -> FrameSequence:
        key = (role, source_id)
        if key not in self._frames:
            self._frames[key] = load_frame_sequence(
                self._root(role) / source_id / "frames",
                fps=self.manifest.fps,
                clip_id=source_id,
            )
        return self._frames[key]

    def clip_frames(self, role: str, entry: ManifestEntry) -> FrameSequence:
        span = entry.source
        src = self.frames(role, span.source_video_id)
        return FrameSequence(
            frames=src.frames[span.start_frame : span.end_frame],
            fps=src.fps,
            clip_id=entry.clip_id,
        )

    def masks(self, source_id: str) -> InstanceMaskSequence:
        if source_id not in self._masks:
            src = self.frames("foreground", source_id)
            self._masks[source_id] = load_instance_masks(
                self._root("foreground") / source_id / "masks", src.frame_count
            )
        return self._masks[source_id]

    def clip_masks(self, entry: ManifestEntry) -> InstanceMaskSequence:
        span = entry.source
        src = self.masks(span.source_video_id)
        return InstanceMaskSequence(
            masks=src.masks[span.start_frame : span.end_frame],
            labels=src.labels,
            frame_shape=src.frame_shape,
        )

    def counts(self, source_id: str) -> list[int]:
        if source_id not in self._counts:
            path = self._root("background") / source_id / "counts.json"
            if not path.exists():
                raise ValidationError(f"missing person-count sidecar: {path}")
            self._counts[source_id] = json.loads(path.read_text())
        return self._counts[source_id]

    def clip_counts(self, entry: ManifestEntry) -> list[int]:
        span = entry.source
        counts = self.counts(span.source_video_id)
        if len(counts) < span.end_frame:
            raise ValidationError(
                f"{span.source_video_id}: counts.json has {len(counts)} entries, "
                f"clip needs frame {span.end_frame - 1}"
            )
        return counts[span.start_frame : span.end_frame]


def _require_stages(manifest: DatasetManifest, stage: str) -> None:
    for dep in _STAGE_DEPS[stage]:
        if not manifest.stage_done(dep):
            raise DependencyError(dep)


def _load_manifest(cfg: PipelineConfig, stage: str) -> DatasetManifest:
    if not cfg.manifest_path.exists():
        raise DependencyError("ingest", f"no manifest at {cfg.manifest_path}; run ingest first")
    manifest = read_manifest(cfg.manifest_path)
    _require_stages(manifest, stage)
    return manifest


def _parallel_map(fn, items, workers: int) -> dict:
    """Apply fn over (key, payload) items; returns {key: result}, order-free."""
    if workers <= 1 or len(items) <= 1:
        return {key: fn(key, payload) for key, payload in items}
    out = {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {key: pool.submit(fn, key, payload) for key, payload in items}
        for key, fut in futures.items():
            out[key] = fut.result()
    return out


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def _scan_sources(root: Path) -> list[str]:
    if not root.is_dir():
        raise ConfigError(f"corpus root does not exist: {root}")
    return sorted(p.name for p in root.iterdir() if (p / "frames").is_dir())


def stage_ingest(cfg: PipelineConfig) -> StageReport:
    """Register every clip-length span of every source video in the manifest.

    Re-running with an unchanged corpus preserves all downstream state:
    existing entries with the same id and span are kept verbatim.
    """
    if not cfg.background_root or not cfg.foreground_root:
        raise ConfigError("ingest needs background_root and foreground_root")
    bg_root = Path(cfg.background_root).resolve()
    fg_root = Path(cfg.foreground_root).resolve()

    report = StageReport(stage="ingest")
    fresh: list[ManifestEntry] = []
    for role, root in (("background", bg_root), ("foreground", fg_root)):
        for source_id in _scan_sources(root):
            files = sorted((root / source_id / "frames").glob("*.png"))
            spans = segment_into_clips(len(files), cfg.clip_len, cfg.clip_len, source_id)
            if not spans:
                report.reject("source_shorter_than_clip")
                continue
            with Image.open(files[0]) as probe:  # header only, no decode
                width, height = probe.size
            for j, span in enumerate(spans):
                paths = {"frames": f"{source_id}/frames"}
                if role == "background":
                    paths["counts"] = f"{source_id}/counts.json"
                else:
                    paths["masks"] = f"{source_id}/masks"
                fresh.append(
                    ManifestEntry(
                        clip_id=f"{source_id}_c{j:03d}",
                        role=role,
                        split="test" if source_id in cfg.test_source_ids else "train",
                        source=span,
                        width=width,
                        height=height,
                        paths=paths,
                    )
                )
                report.processed += 1
                report.accepted += 1

    if cfg.manifest_path.exists():
        old = read_manifest(cfg.manifest_path)
        kept = {e.clip_id: e for e in old.entries}
        merged = []
        for e in fresh:
            prior = kept.get(e.clip_id)
            if prior is not None and prior.role == e.role and prior.source == e.source:
                merged.append(prior)
            else:
                merged.append(e)
        fresh_ids = {e.clip_id for e in fresh}
        merged.extend(e for e in old.entries if e.role == "composite" and e.clip_id not in fresh_ids)
        manifest = DatasetManifest(
            entries=merged,
            clip_len=cfg.clip_len,
            fps=cfg.fps,
            background_root=str(bg_root),
            foreground_root=str(fg_root),
            stages_completed=old.stages_completed,
        )
    else:
        manifest = DatasetManifest(
            entries=fresh,
            clip_len=cfg.clip_len,
            fps=cfg.fps,
            background_root=str(bg_root),
            foreground_root=str(fg_root),
        )
    manifest.mark_stage("ingest")
    write_manifest(manifest, cfg.manifest_path)
    return report


def stage_filter_bg(cfg: PipelineConfig) -> StageReport:
    """Run the three admission tests on every background clip."""
    manifest = _load_manifest(cfg, "filter-bg")
    cache = _SourceCache(manifest)
    entries = sorted(manifest.by_role("background"), key=lambda e: e.clip_id)

    def work(clip_id: str, entry: ManifestEntry):
        seq = cache.clip_frames("background", entry)
        counts = cache.clip_counts(entry)
        return evaluate_background(seq, counts, cfg.filters)

    # Warm the per-source caches serially; PNG decoding is not thread-safe
    # against double loading the same source.
    for e in entries:
        cache.frames("background", e.source.source_video_id)
        cache.counts(e.source.source_video_id)
    verdicts = _parallel_map(work, [(e.clip_id, e) for e in entries], cfg.workers)

    report = StageReport(stage="filter-bg", processed=len(entries))
    for e in entries:
        v = verdicts[e.clip_id]
        e.filter_verdict = v
        if v.passed:
            report.accepted += 1
        else:
            if not v.luminance_passed:
                report.reject("luminance")
            if not v.transitions_passed:
                report.reject("scene_transition")
            if not v.person_passed:
                report.reject("person_count")
    manifest.mark_stage("filter-bg")
    write_manifest(manifest, cfg.manifest_path)
    return report


def _selection_seed(cfg: PipelineConfig) -> int:
    if cfg.selection.seed:
        return cfg.selection.seed
    return fnv1a64(b"select-fg") ^ cfg.master_seed


def stage_select_fg(cfg: PipelineConfig) -> StageReport:
    """Compute crowd stats for foreground clips and stratify-sample them."""
    manifest = _load_manifest(cfg, "select-fg")
    cache = _SourceCache(manifest)
    entries = sorted(manifest.by_role("foreground"), key=lambda e: e.clip_id)

    def work(clip_id: str, entry: ManifestEntry):
        masks = cache.clip_masks(entry)
        h, w = masks.mask_shape()
        return compute_crowd_stats(masks, h * w)

    for e in entries:
        cache.masks(e.source.source_video_id)
    stats = _parallel_map(work, [(e.clip_id, e) for e in entries], cfg.workers)

    report = StageReport(stage="select-fg", processed=len(entries))
    candidates = []
    for e in entries:
        s = stats[e.clip_id]
        e.crowd = s
        if s.masked_frame_count < cfg.selection.min_masked_frames:
            report.reject("below_min_masked_frames")
        elif s.crowd_bin is None:
            report.reject("crowd_over_50_percent")
        else:
            candidates.append((e.clip_id, s.crowd_bin))

    sel = stratified_sample(
        candidates, replace(cfg.selection, seed=_selection_seed(cfg))
    )
    chosen = set(sel.selected)
    for e in entries:
        e.selected = e.clip_id in chosen
    report.accepted = len(chosen)
    report.reject("not_sampled", len(candidates) - len(chosen))
    report.details["per_bin"] = {k: len(v) for k, v in sel.per_bin.items()}
    report.details["shortfalls"] = dict(sel.shortfalls)
    for k, short in sorted(sel.shortfalls.items()):
        logger.warning("bin %d short by %d clips", k, short)
    manifest.mark_stage("select-fg")
    write_manifest(manifest, cfg.manifest_path)
    return report


def stage_compose(
    cfg: PipelineConfig, force: bool = False, out_root: str | Path | None = None
) -> StageReport:
    """Pair selected foregrounds with accepted backgrounds and write triplets.

    Each foreground draws its background uniformly (seeded per clip) from
    accepted backgrounds of the same split. One shadow parameter draw per
    composite, derived from the master seed and the composite id.
    """
    manifest = _load_manifest(cfg, "compose")
    cache = _SourceCache(manifest)
    out_root = Path(out_root) if out_root is not None else Path(cfg.output_root)

    accepted_by_split: dict[str, list[ManifestEntry]] = {}
    for e in manifest.by_role("background"):
        if e.filter_verdict is not None and e.filter_verdict.passed:
            accepted_by_split.setdefault(e.split, []).append(e)
    for pool in accepted_by_split.values():
        pool.sort(key=lambda e: e.clip_id)

    selected = sorted(
        (e for e in manifest.by_role("foreground") if e.selected),
        key=lambda e: e.clip_id,
    )
    report = StageReport(stage="compose", processed=len(selected))

    plans = []
    for fg in selected:
        pool = accepted_by_split.get(fg.split, [])
        if not pool:
            report.reject("no_accepted_background_in_split")
            continue
        rng = random.Random(fnv1a64(b"pair:" + fg.clip_id.encode()) ^ cfg.master_seed)
        bg = pool[rng.randrange(len(pool))]
        composite_id = f"{fg.clip_id}__{bg.clip_id}"
        plans.append((composite_id, (fg, bg)))

    def work(composite_id: str, pair):
        fg, bg = pair
        prior = manifest.get(composite_id) if manifest.has(composite_id) else None
        clip_seed = derive_clip_seed(cfg.master_seed, composite_id)
        bg_seq = cache.clip_frames("background", bg)
        sampler = replace(cfg.sampler, frame_height=bg_seq.height)
        params = sample_shadow_params(clip_seed, sampler)
        clip_dir = out_root / CLIPS_DIRNAME / composite_id
        rel_dir = os.path.relpath(clip_dir, cfg.output_root)
        if (
            prior is not None
            and not force
            and prior.seed == clip_seed
            and prior.shadow_params == params
            and (clip_dir / "input").is_dir()
        ):
            return prior, False
        fg_seq = cache.clip_frames("foreground", fg)
        fg_masks = cache.clip_masks(fg)
        triplet = compose_triplet(bg_seq, fg_masks, fg_seq, params)
        write_triplet(triplet, clip_dir, force=True)
        entry = ManifestEntry(
            clip_id=composite_id,
            role="composite",
            split=fg.split,
            width=bg_seq.width,
            height=bg_seq.height,
            paths={layer: f"{rel_dir}/{layer}" for layer in ("input", "mask", "gt")},
            crowd=fg.crowd,
            background_id=bg.clip_id,
            foreground_id=fg.clip_id,
            shadow_params=params,
            seed=clip_seed,
            review=prior.review if prior is not None else None,
        )
        return entry, True

    for fg, bg in (pair for _, pair in plans):
        cache.frames("background", bg.source.source_video_id)
        cache.frames("foreground", fg.source.source_video_id)
        cache.masks(fg.source.source_video_id)
    results = _parallel_map(work, plans, cfg.workers)

    index_of = {e.clip_id: i for i, e in enumerate(manifest.entries)}
    for composite_id in sorted(results):
        entry, written = results[composite_id]
        if composite_id in index_of:
            manifest.entries[index_of[composite_id]] = entry
        else:
            manifest.entries.append(entry)
        if written:
            report.accepted += 1
        else:
            report.details.setdefault("skipped_up_to_date", 0)
            report.details["skipped_up_to_date"] += 1
    manifest.mark_stage("compose")
    write_manifest(manifest, cfg.manifest_path)
    return report


def stage_evaluate(
    cfg: PipelineConfig,
    pred_root: str | Path,
    gt_root: str | Path | None = None,
    scorer_cmd: str | None = None,
) -> tuple[StageReport, ReportTable]:
    """Score prediction clips against composite ground truth and report.

    ``pred_root`` holds one frame directory per composite clip id. Ground
    truth and masks come from the manifest unless ``gt_root`` overrides
    the gt location with the same per-clip layout.
    """
    manifest = _load_manifest(cfg, "evaluate")
    pred_root = Path(pred_root)
    out_root = Path(cfg.output_root)
    report = StageReport(stage="evaluate")

    composites = sorted(manifest.by_role("composite"), key=lambda e: e.clip_id)
    scorable = []
    for e in composites:
        report.processed += 1
        if not (pred_root / e.clip_id).is_dir():
            report.reject("missing_prediction")
            continue
        scorable.append(e)

    def work(clip_id: str, entry: ManifestEntry):
        pred = load_frame_sequence(pred_root / clip_id, fps=manifest.fps, clip_id=clip_id)
        clip_dir = (out_root / entry.paths["input"]).parent
        triplet = load_triplet(clip_dir, fps=manifest.fps)
        gt = triplet.gt
        if gt_root is not None:
            gt = load_frame_sequence(Path(gt_root) / clip_id, fps=manifest.fps, clip_id=clip_id)
        return score_clip(clip_id, pred, gt, triplet.mask, entry.crowd.crowd_bin)

    results = _parallel_map(work, [(e.clip_id, e) for e in scorable], cfg.workers)
    scores = [results[cid] for cid in sorted(results)]
    report.accepted = len(scores)

    if scorer_cmd and scores:
        pairs = []
        for e in scorable:
            gt_dir = (
                str(Path(gt_root) / e.clip_id)
                if gt_root is not None
                else str(out_root / e.paths["gt"])
            )
            pairs.append((e.clip_id, str(pred_root / e.clip_id), gt_dir))
        run = run_external_scorer(scorer_cmd, pairs)
        name = Path(shlex.split(scorer_cmd)[0]).stem
        for s in scores:
            if s.clip_id in run.scores:
                s.perceptual[name] = run.scores[s.clip_id]
        if run.missing:
            report.details["scorer_missing"] = run.missing

    table = build_report(scores)
    (out_root / "report.json").write_text(
        json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    (out_root / "report.txt").write_text(render_report(table) + "\n")
    manifest.mark_stage("evaluate")
    write_manifest(manifest, cfg.manifest_path)
    return report, table


def run_stage(stage_name: str, cfg: PipelineConfig, **kwargs) -> StageReport:
    """Run one named pipeline stage; raises DependencyError when out of order."""
    if stage_name == "ingest":
        return stage_ingest(cfg)
    if stage_name == "filter-bg":
        return stage_filter_bg(cfg)
    if stage_name == "select-fg":
        return stage_select_fg(cfg)
    if stage_name == "compose":
        return stage_compose(cfg, **kwargs)
    if stage_name == "evaluate":
        report, _ = stage_evaluate(cfg, **kwargs)
        return report
    raise ConfigError(f"unknown stage: {stage_name!r} (expected one of {STAGES})")
