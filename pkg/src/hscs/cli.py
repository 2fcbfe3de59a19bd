"""Command-line entry point: run co-saliency detection over one or more groups."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import PipelineConfig, load_config_file, print_config
from .dataset_io import discover_groups
from .errors import HscsError

log = logging.getLogger("hscs")

# flag -> (config field, type)
VALUE_FLAGS = {
    "--n-superpixels": ("n_superpixels", int),
    "--k-seeds": ("k_seeds", int),
    "--keep-ratio": ("keep_ratio", float),
    "--clusters": ("k_clusters", int),
    "--xi": ("xi", float),
    "--sigma2": ("sigma2", float),
    "--sigma2-recon": ("sigma2_recon", float),
    "--beta2": ("beta2", float),
    "--top-fg": ("top_fg", int),
    "--rng-seed": ("rng_seed", int),
    "--compactness": ("compactness", float),
    "--smooth-weight": ("smooth_weight", float),
    "--holistic-weight": ("holistic_weight", float),
}
BOOL_FLAGS = {
    "--require-intra": "require_intra",
    "--invert-depth": "invert_depth",
    "--dump-superpixels": "dump_superpixels",
    "--dump-seeds": "dump_seeds",
    "--dump-inter": "dump_inter",
    "--dump-energy": "dump_energy",
    "--dump-features": "dump_features",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hscs", description="Hierarchical-sparsity co-saliency detection for RGBD groups.")
    p.add_argument("--input", type=Path, help="group directory or a directory of groups")
    p.add_argument("--output", type=Path, help="where saliency maps and reports go")
    p.add_argument("--config-file", type=Path, help="config dump to start from")
    p.add_argument("--jobs", type=int, default=1, help="groups processed in parallel")
    p.add_argument("--print-config", action="store_true",
                   help="print the effective configuration and exit")
    for flag, (name, typ) in VALUE_FLAGS.items():
        p.add_argument(flag, dest=name, type=typ, default=None)
    for flag, name in BOOL_FLAGS.items():
        p.add_argument(flag, dest=name, action="store_true", default=None)
    return p


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config_file is not None:
        cfg = load_config_file(args.config_file, cfg)
    names = [n for n, _ in VALUE_FLAGS.values()] + list(BOOL_FLAGS.values())
    flags = {n: getattr(args, n) for n in names if getattr(args, n) is not None}
    return cfg.override(flags, "flag")


def setup_logging():
    level = os.environ.get("HSCS_LOG", "WARNING").upper()
    logging.basicConfig(level=int(level) if level.isdigit() else getattr(logging, level, 30),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _run_one(group_dir: Path, out_dir: Path, cfg: PipelineConfig) -> tuple[str, int, str]:
    from .pipeline import run_group

    try:
        _, report = run_group(group_dir, out_dir, cfg)
    except HscsError as exc:
        return group_dir.name, 1, f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # keep the batch going; the traceback goes to the log
        log.exception("group %s crashed", group_dir.name)
        return group_dir.name, 1, f"{type(exc).__name__}: {exc}"
    summary = "" if report is None else f"F={report.mean_f:.4f} MAE={report.mean_mae:.4f}"
    return group_dir.name, 0, summary


def run_pipeline(root, out, cfg: PipelineConfig, jobs: int = 1) -> int:
    """Process every group under `root`; returns the process exit status."""
    root, out = Path(root), Path(out)
    groups = discover_groups(root)
    if not groups:
        log.error("no groups (directories with rgb/) under %s", root)
        return 2
    single = groups == [root]
    targets = [(g, out if single else out / g.name) for g in groups]
    if jobs > 1 and len(targets) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, *zip(*targets), [cfg] * len(targets)))
    else:
        results = [_run_one(g, o, cfg) for g, o in targets]
    status = 0
    for name, code, message in results:
        if code:
            status = 1
            print(f"{name}: FAILED {message}", file=sys.stderr)
        else:
            print(f"{name}: ok {message}".rstrip())
    return status


def main(argv=None) -> int:
    setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ValueError, TypeError, OSError) as exc:
        parser.error(str(exc))
    if args.print_config:
        sys.stdout.write(print_config(cfg))
        return 0
    if args.input is None or args.output is None:
        parser.error("--input and --output are required")
    return run_pipeline(args.input, args.output, cfg, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
