"""PR curves, F-measure and MAE against binary ground truth, plus CSV reports."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset_io import quantize
from .errors import DimensionMismatch, IoError, NoGroundTruth

BETA2 = 0.3
N_THRESHOLDS = 256
MAX_ADAPTIVE = 0.98


@dataclass(frozen=True)
class PrCurve:
    precision: np.ndarray  # (256,), index = threshold on the 8-bit map
    recall: np.ndarray

    def f_beta(self, beta2: float = BETA2) -> np.ndarray:
        return f_from_pr(self.precision, self.recall, beta2)


@dataclass
class MetricReport:
    ids: list
    f_beta: list
    mae: list
    max_f: list
    pr: PrCurve
    method: str = "hscs"
    config: dict = field(default_factory=dict)

    @property
    def mean_f(self) -> float:
        return float(np.mean(self.f_beta))

    @property
    def mean_mae(self) -> float:
        return float(np.mean(self.mae))

    @property
    def mean_max_f(self) -> float:
        return float(np.mean(self.max_f))


def f_from_pr(precision, recall, beta2: float = BETA2):
    p = np.asarray(precision, dtype=np.float64)
    r = np.asarray(recall, dtype=np.float64)
    den = beta2 * p + r
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(den > 0, (1 + beta2) * p * r / np.where(den > 0, den, 1.0), 0.0)
    return f if f.ndim else float(f)


def _check(smap, gt):
    if gt is None:
        raise NoGroundTruth("ground truth required")
    smap = np.asarray(smap, dtype=np.float64)
    gt = np.asarray(gt).astype(bool)
    if smap.shape != gt.shape:
        raise DimensionMismatch(f"map {smap.shape} vs ground truth {gt.shape}")
    return smap, gt


def precision_recall(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float]:
    tp = float(np.sum(pred & gt))
    fp = float(np.sum(pred & ~gt))
    fn = float(np.sum(~pred & gt))
    precision = tp / (tp + fp) if tp + fp > 0 else 1.0
    recall = tp / (tp + fn) if tp + fn > 0 else 1.0
    return precision, recall


def _pr_single(smap, gt):
    q = quantize(smap).ravel()
    g = gt.ravel()
    # counts of positives / negatives at each 8-bit level, then suffix sums
    pos = np.bincount(q[g], minlength=N_THRESHOLDS)
    neg = np.bincount(q[~g], minlength=N_THRESHOLDS)
    tp = np.cumsum(pos[::-1])[::-1].astype(np.float64)
    fp = np.cumsum(neg[::-1])[::-1].astype(np.float64)
    n_pos = float(g.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 1.0)
        recall = tp / n_pos if n_pos > 0 else np.ones(N_THRESHOLDS)
    return precision, recall


def pr_curve(maps, gts) -> PrCurve:
    """Mean precision/recall over images for thresholds t = 0..255 (map >= t)."""
    if gts is None or len(gts) == 0:
        raise NoGroundTruth("ground truth required for PR curves")
    if len(maps) != len(gts):
        raise DimensionMismatch(f"{len(maps)} maps vs {len(gts)} ground truths")
    curves = [_pr_single(*_check(m, g)) for m, g in zip(maps, gts)]
    return PrCurve(np.mean([c[0] for c in curves], axis=0),
                   np.mean([c[1] for c in curves], axis=0))


def adaptive_threshold(smap) -> float:
    return min(2.0 * float(np.mean(smap)), MAX_ADAPTIVE)


def f_measure(smap, gt, beta2: float = BETA2) -> float:
    """F-beta after binarizing at min(2 * mean, 0.98)."""
    smap, gt = _check(smap, gt)
    p, r = precision_recall(smap >= adaptive_threshold(smap), gt)
    return f_from_pr(p, r, beta2)


def max_f_measure(smap, gt, beta2: float = BETA2) -> float:
    smap, gt = _check(smap, gt)
    p, r = _pr_single(smap, gt)
    return float(np.max(f_from_pr(p, r, beta2)))


def mae(smap, gt) -> float:
    smap = np.asarray(smap, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if smap.shape != gt.shape:
        raise DimensionMismatch(f"map {smap.shape} vs ground truth {gt.shape}")
    return float(np.mean(np.abs(smap - gt)))


def evaluate(maps, gts, ids, beta2: float = BETA2, method: str = "hscs",
             config: dict | None = None) -> MetricReport:
    if gts is None:
        raise NoGroundTruth("ground truth required")
    return MetricReport(list(ids),
                        [f_measure(m, g, beta2) for m, g in zip(maps, gts)],
                        [mae(m, g) for m, g in zip(maps, gts)],
                        [max_f_measure(m, g, beta2) for m, g in zip(maps, gts)],
                        pr_curve(maps, gts), method, dict(config or {}))


def pr_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".pr.csv")


def emit_report(report: MetricReport, path) -> None:
    """Per-image rows plus a MEAN row; the PR curve goes to ``<stem>.pr.csv``."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "F_beta", "MAE", "max_F_beta"])
            for row in zip(report.ids, report.f_beta, report.mae, report.max_f):
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])
            w.writerow(["MEAN", repr(report.mean_f), repr(report.mean_mae),
                        repr(report.mean_max_f)])
        with pr_path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "precision", "recall"])
            for t in range(N_THRESHOLDS):
                w.writerow([t, repr(float(report.pr.precision[t])),
                            repr(float(report.pr.recall[t]))])
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_report(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
