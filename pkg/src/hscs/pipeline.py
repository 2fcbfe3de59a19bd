"""End-to-end co-saliency detection for one image group."""
from __future__ import annotations

import csv
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset_io
from .config import PipelineConfig
from .errors import MissingIntra
from .evaluation import emit_report, evaluate
from .features import compute_features, compute_texton_map, depth_confidence, lab_histograms
from .inter_saliency import InterSaliencyBundle, compute_inter
from .intra_saliency import fallback_intra, ingest_intra
from .refinement import (RefinementProblem, build_system, energy_terms, global_foreground_model,
                         initial_saliency, solve_refinement, solve_system, superpixel_to_pixel)
from .seed_ranking import SeedSet, rank_seeds, select_initial_seeds
from .superpixel import slic_segment

log = logging.getLogger(__name__)

FEATURE_COLUMNS = (["r", "g", "b", "L", "a", "b_lab", "h", "s", "v", "depth", "x", "y"]
                   + [f"t{k}" for k in range(15)])


@dataclass
class GroupResult:
    ids: list
    segs: list
    features: list
    hists: list
    lams: list
    intra: list
    seeds_initial: SeedSet
    seeds_final: SeedSet
    inter: InterSaliencyBundle
    initial: list  # normalized s per image
    problem: RefinementProblem
    refined: list  # normalized refined saliency per image
    pixel_maps: list
    timings: dict = field(default_factory=dict)


@contextmanager
def _stage(timings: dict, name: str):
    start = time.perf_counter()
    yield
    timings[name] = time.perf_counter() - start
    log.info("stage %-10s %.3fs", name, timings[name])


def detect_group(group, cfg: PipelineConfig | None = None) -> GroupResult:
    cfg = cfg or PipelineConfig()
    timings: dict = {}
    ids = group.ids
    with _stage(timings, "segment"):
        segs = [slic_segment(img, cfg.n_superpixels, cfg.compactness) for img in group.images]
    with _stage(timings, "features"):
        textons = compute_texton_map(group, cfg.rng_seed,
                                     luminance=[seg.lab[..., 0] for seg in segs])
        features = [compute_features(seg, t) for seg, t in zip(segs, textons.labels)]
        hists = [lab_histograms(seg) for seg in segs]
        lams = [depth_confidence(img.depth).lam for img in group.images]
    with _stage(timings, "intra"):
        if group.intra_maps is not None:
            intra = ingest_intra(group, segs)
        elif cfg.require_intra:
            raise MissingIntra(f"group {group.name!r} has no intra/ maps")
        else:
            intra = [fallback_intra(img, seg, lam)
                     for img, seg, lam in zip(group.images, segs, lams)]
    with _stage(timings, "seeds"):
        initial_seeds = select_initial_seeds(intra, cfg.k_seeds, features, hists, lams)
        scored, final = rank_seeds(initial_seeds, cfg.k_clusters, cfg.keep_ratio, cfg.sigma2,
                                   cfg.rng_seed)
    with _stage(timings, "inter"):
        inter = compute_inter(features, intra, final, cfg.k_seeds, cfg.xi, cfg.sigma2_recon, ids)
    with _stage(timings, "refine"):
        s_list = [initial_saliency(a, r) for a, r in zip(intra, inter.S_r)]
        model = global_foreground_model(s_list, hists, cfg.top_fg)
        problem = build_system(s_list, [seg.edges for seg in segs], hists,
                               [seg.mean_depth for seg in segs], lams, model, cfg.sigma2,
                               cfg.smooth_weight, cfg.holistic_weight)
        flat = solve_refinement(problem)
        refined = [flat[blk] for blk in problem.blocks()]
        pixel_maps = [superpixel_to_pixel(r, seg) for r, seg in zip(refined, segs)]
    timings["total"] = sum(timings.values())
    return GroupResult(ids, segs, features, hists, lams, intra, scored, final, inter, s_list,
                       problem, refined, pixel_maps, timings)


def _seed_overlay(img, seg, initial: SeedSet, final: SeedSet, i: int) -> np.ndarray:
    out = img.rgb.copy()
    for seeds, color in ((initial, (255, 0, 0)), (final, (255, 255, 0))):
        picked = seeds.superpixel_index[seeds.image_index == i]
        out[np.isin(seg.labels, picked)] = color
    return out


def write_outputs(result: GroupResult, group, out_dir, cfg: PipelineConfig):
    """Write saliency maps, metrics (when ground truth exists) and requested dumps."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_id, smap in zip(result.ids, result.pixel_maps):
        dataset_io.write_saliency_map(smap, out_dir / f"{image_id}.png")

    report = None
    if group.ground_truth is not None:
        report = evaluate(result.pixel_maps, group.ground_truth, result.ids, cfg.beta2)
        emit_report(report, out_dir / "metrics.csv")

    if cfg.dump_superpixels:
        sub = out_dir / "superpixels"
        sub.mkdir(exist_ok=True)
        for image_id, seg in zip(result.ids, result.segs):
            dataset_io.write_label_raster(seg.labels, sub / f"{image_id}.png")
    if cfg.dump_seeds:
        sub = out_dir / "seeds"
        sub.mkdir(exist_ok=True)
        for i, (img, seg) in enumerate(zip(group.images, result.segs)):
            overlay = _seed_overlay(img, seg, result.seeds_initial, result.seeds_final, i)
            dataset_io.write_rgb(overlay, sub / f"{img.id}.png")
    if cfg.dump_inter:
        sub = out_dir / "inter"
        sub.mkdir(exist_ok=True)
        for i, (image_id, seg) in enumerate(zip(result.ids, result.segs)):
            for tag, maps in (("gr", result.inter.S_gr), ("pr", result.inter.S_pr),
                              ("r", result.inter.S_r)):
                dataset_io.write_saliency_map(superpixel_to_pixel(maps[i].values, seg),
                                              sub / f"{image_id}_{tag}.png")
    if cfg.dump_energy:
        p = result.problem
        before = energy_terms(p, p.s)
        after = energy_terms(p, solve_system(p))
        log.info("energy before T_u=%.6g T_s=%.6g T_h=%.6g", *before)
        log.info("energy after  T_u=%.6g T_s=%.6g T_h=%.6g", *after)
        with (out_dir / "energy.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["when", "T_u", "T_s", "T_h"])
            w.writerow(["before", *map(repr, before)])
            w.writerow(["after", *map(repr, after)])
    if cfg.dump_features:
        sub = out_dir / "features"
        sub.mkdir(exist_ok=True)
        for image_id, f in zip(result.ids, result.features):
            with (sub / f"{image_id}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["superpixel", *FEATURE_COLUMNS])
                for m, row in enumerate(f):
                    w.writerow([m, *(repr(float(v)) for v in row)])
    return report


def run_group(root, out_dir, cfg: PipelineConfig):
    group = dataset_io.load_group(root, cfg)
    result = detect_group(group, cfg)
    report = write_outputs(result, group, out_dir, cfg)
    n = len(group)
    log.info("group %s: %d images, %.2fs (%.2fs/image)", group.name, n,
             result.timings["total"], result.timings["total"] / n)
    return result, report
