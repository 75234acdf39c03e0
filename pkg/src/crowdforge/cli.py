"""crowdforge command line: one subcommand per pipeline stage.

Exit codes: 0 success, 2 validation/configuration error, 3 missing stage
dependency, 1 any other pipeline failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, CrowdforgeError, DependencyError, ValidationError
from .filters import FilterConfig
from .losses import LossConfig, NoiseResidualClip, finite_diff_grad_check
from .metrics import render_report
from .pipeline import (
    PipelineConfig,
    stage_compose,
    stage_evaluate,
    stage_filter_bg,
    stage_ingest,
    stage_select_fg,
)
from .selection import SelectionConfig

logger = logging.getLogger(__name__)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--manifest", help="dataset manifest path")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--workers", type=int, help="per-clip worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdforge",
        description="Semi-synthetic dataset construction for human+shadow removal",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="register source clips in the manifest")
    _add_common(p)
    p.add_argument("--background-root", help="background source tree")
    p.add_argument("--foreground-root", help="foreground source tree")
    p.add_argument("--out", help="dataset output root")
    p.add_argument("--clip-len", type=int, default=None)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument(
        "--test-source", action="append", default=None, metavar="SOURCE_ID",
        help="source id assigned to the test split (repeatable)",
    )

    p = sub.add_parser("filter-bg", help="run background admission filters")
    _add_common(p)
    p.add_argument("--y-min", type=float, default=None)
    p.add_argument("--y-max", type=float, default=None)
    p.add_argument("--ssim-cut", type=float, default=None)
    p.add_argument("--hist-cut", type=float, default=None)
    p.add_argument("--max-people", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)

    p = sub.add_parser("select-fg", help="bin foreground clips and sample per bin")
    _add_common(p)
    p.add_argument("--min-masked-frames", type=int, default=None)
    p.add_argument("--per-bin", type=int, default=None)

    p = sub.add_parser("compose", help="composite selected foregrounds onto backgrounds")
    _add_common(p)
    p.add_argument("--out", help="directory for composite clips (default: dataset root)")
    p.add_argument("--force", action="store_true", help="rewrite existing composites")

    p = sub.add_parser("evaluate", help="score prediction clips and build the report")
    _add_common(p)
    p.add_argument("--pred", required=True, help="prediction root, one frame dir per clip")
    p.add_argument("--gt", help="override ground-truth root")
    p.add_argument("--scorer", help="external perceptual scorer command")

    p = sub.add_parser("loss-check", help="finite-difference check of the loss gradients")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-4)
    p.add_argument("--alpha-sub", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("review", help="serve the manual curation API and UI")
    _add_common(p)
    p.add_argument("--port", type=int, default=8420)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="static UI bundle directory")

    return parser


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = PipelineConfig.from_json(args.config)
    else:
        out = getattr(args, "out", None)
        manifest = getattr(args, "manifest", None)
        if out is None and manifest is None:
            raise ConfigError("need --config, --manifest, or --out to locate the dataset")
        root = out if out is not None else str(Path(manifest).parent)
        cfg = PipelineConfig(output_root=root)
    if getattr(args, "manifest", None):
        cfg = replace(cfg, output_root=str(Path(args.manifest).parent))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, workers=args.workers)
    return cfg


def _override_filters(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    f = cfg.filters
    updates = {}
    for flag, name in (
        ("y_min", "y_min"),
        ("y_max", "y_max"),
        ("ssim_cut", "ssim_cut"),
        ("hist_cut", "hist_corr_cut"),
        ("max_people", "max_people"),
        ("tolerance", "tolerance"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            updates[name] = value
    if updates:
        cfg = replace(cfg, filters=FilterConfig(**{**vars(f), **updates}))
    return cfg


def _override_selection(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    updates = {}
    if getattr(args, "min_masked_frames", None) is not None:
        updates["min_masked_frames"] = args.min_masked_frames
    if getattr(args, "per_bin", None) is not None:
        updates["n_per_bin"] = args.per_bin
    if updates:
        cfg = replace(cfg, selection=SelectionConfig(**{**vars(cfg.selection), **updates}))
    return cfg


def _cmd_loss_check(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    cfg = LossConfig(alpha_sub=args.alpha_sub)
    lengths = (1, 2, 3, 8)
    worst = 0.0
    for trial in range(args.trials):
        t = lengths[trial % len(lengths)]
        shape = (t, 2, 3)
        clip = NoiseResidualClip(
            eps_hat=rng.standard_normal(shape), eps=rng.standard_normal(shape)
        )
        worst = max(worst, finite_diff_grad_check(clip, cfg, h=args.h))
    ok = worst < 1e-4
    print(
        f"gradient check over {args.trials} clips (T in {lengths}): "
        f"max relative error {worst:.3e} -> {'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


def _run(args: argparse.Namespace) -> int:
    if args.command == "loss-check":
        return _cmd_loss_check(args)

    if args.command == "review":
        from .review import serve

        cfg = _build_config(args)
        serve(
            manifest_path=cfg.manifest_path,
            dataset_root=cfg.output_root,
            port=args.port,
            host=args.host,
            ui_dir=args.ui,
        )
        return 0

    cfg = _build_config(args)
    if args.command == "ingest":
        if args.background_root:
            cfg = replace(cfg, background_root=args.background_root)
        if args.foreground_root:
            cfg = replace(cfg, foreground_root=args.foreground_root)
        if args.clip_len is not None:
            cfg = replace(cfg, clip_len=args.clip_len)
        if args.fps is not None:
            cfg = replace(cfg, fps=args.fps)
        if args.test_source:
            cfg = replace(cfg, test_source_ids=list(args.test_source))
        report = stage_ingest(cfg)
    elif args.command == "filter-bg":
        report = stage_filter_bg(_override_filters(cfg, args))
    elif args.command == "select-fg":
        report = stage_select_fg(_override_selection(cfg, args))
    elif args.command == "compose":
        report = stage_compose(cfg, force=args.force, out_root=args.out)
    elif args.command == "evaluate":
        report, table = stage_evaluate(
            cfg, pred_root=args.pred, gt_root=args.gt, scorer_cmd=args.scorer
        )
        print(render_report(table))
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {args.command!r}")
    print(report.summary())
    if report.details.get("shortfalls"):
        for k, short in sorted(report.details["shortfalls"].items()):
            print(f"  shortfall: bin {k} short by {short}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except DependencyError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except CrowdforgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
