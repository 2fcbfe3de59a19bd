"""Superpixel descriptors, colour histograms, affinities and depth confidence.

Each superpixel is described by a 27-dim vector laid out as

    [ mean RGB, Lab, HSV (9) | mean depth (1) | centroid x, y (2) | textons (15) ]

with every entry in [0, 1].
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage

from .clustering import kmeans, sq_dists
from .errors import DegenerateTextures
from .superpixel import scaled_lab

N_TEXTONS = 15
FEATURE_DIM = 27
HIST_BINS = 8  # per Lab channel
EPS_DIV = 1e-10
TEXTON_STRIDE = 2  # 2x2 subsampling = 4x fewer pixels
ENERGY_SIGMA = 2.0
MAX_TEXTON_SAMPLES = 40_000

COLOR = slice(0, 9)
DEPTH = 9
POSITION = slice(10, 12)
TEXTURE = slice(12, 27)


@dataclass(frozen=True)
class DepthConfidence:
    mean: float
    cv: float
    entropy: float
    lam: float


@dataclass(frozen=True)
class TextonMap:
    labels: list  # one (H, W) int raster per image
    codebook: np.ndarray  # (15, n_filters), in standardized response space
    response_mean: np.ndarray
    response_std: np.ndarray


def filter_bank(gray: np.ndarray) -> np.ndarray:
    """17 responses: Gaussians (3), LoG (4), first/second derivatives at 2 scales (10)."""
    out = []
    for s in (1, 2, 4):
        out.append(ndimage.gaussian_filter(gray, s))
    for s in (1, 2, 4, 8):
        out.append(ndimage.gaussian_laplace(gray, s))
    for s in (2, 4):
        for order in ((0, 1), (1, 0), (0, 2), (2, 0), (1, 1)):
            out.append(ndimage.gaussian_filter(gray, s, order=order))
    return np.stack(out, axis=-1)


def texture_energy(responses: np.ndarray) -> np.ndarray:
    """Rectify the band-pass channels and pool locally.

    Signed derivative and LoG responses flip with the phase of a periodic
    pattern; their locally averaged magnitude does not.
    """
    out = responses.copy()
    out[..., 3:] = np.abs(out[..., 3:])
    # cv2 blurs all channels at once (up to 512) and is much faster than ndimage here
    return cv2.GaussianBlur(out, (0, 0), ENERGY_SIGMA, borderType=cv2.BORDER_REFLECT)


def _luminance(img) -> np.ndarray:
    return scaled_lab(img.rgb)[..., 0]


def compute_texton_map(group, rng_seed: int = 0, luminance=None) -> TextonMap:
    """Learn a 15-entry texton codebook shared by the group and label every pixel."""
    lums = luminance if luminance is not None else [_luminance(img) for img in group.images]
    responses = [texture_energy(filter_bank(l)) for l in lums]
    sample = np.concatenate([r[::TEXTON_STRIDE, ::TEXTON_STRIDE].reshape(-1, r.shape[-1])
                             for r in responses])
    rng = np.random.default_rng(rng_seed)
    if len(sample) > MAX_TEXTON_SAMPLES:
        sample = sample[np.sort(rng.choice(len(sample), MAX_TEXTON_SAMPLES, replace=False))]
    mu = sample.mean(0)
    sd = sample.std(0)
    sd[sd < 1e-12] = 1.0
    z = (sample - mu) / sd

    n_distinct = len(np.unique(np.round(z, 12), axis=0))
    if n_distinct < N_TEXTONS:
        warnings.warn(f"only {n_distinct} distinct filter responses; padding texton codebook",
                      DegenerateTextures, stacklevel=2)
        distinct = np.unique(np.round(z, 12), axis=0)
        result = kmeans(distinct, len(distinct), rng_seed=rng_seed)
        pad = np.repeat(result.centers[-1:], N_TEXTONS - len(distinct), axis=0)
        codebook = np.concatenate([result.centers, pad])
    else:
        codebook = kmeans(z, N_TEXTONS, rng_seed=rng_seed).centers

    labels = []
    for r in responses:
        flat = (r.reshape(-1, r.shape[-1]) - mu) / sd
        labels.append(sq_dists(flat, codebook).argmin(1).reshape(r.shape[:2]))
    return TextonMap(labels, codebook, mu, sd)


def texton_histograms(seg, texton_labels: np.ndarray) -> np.ndarray:
    flat = seg.labels.ravel().astype(np.int64) * N_TEXTONS + texton_labels.ravel()
    counts = np.bincount(flat, minlength=seg.n_regions * N_TEXTONS).reshape(-1, N_TEXTONS)
    return counts / seg.pixel_count[:, None]


def compute_features(seg, texton_labels: np.ndarray) -> np.ndarray:
    """(n_regions, 27) feature matrix for a segmentation."""
    return np.concatenate([seg.mean_rgb, seg.mean_lab, seg.mean_hsv,
                           seg.mean_depth[:, None], seg.centroid,
                           texton_histograms(seg, texton_labels)], axis=1)


def compute_feature(sp, seg, texton_labels: np.ndarray) -> np.ndarray:
    """Descriptor of a single superpixel, computed from its pixel mask."""
    mask = seg.mask(sp.index)
    ys, xs = np.nonzero(mask)
    t = np.bincount(texton_labels[mask], minlength=N_TEXTONS) / mask.sum()
    return np.concatenate([seg.rgb[mask].mean(0), seg.lab[mask].mean(0), seg.hsv[mask].mean(0),
                           [seg.depth[mask].mean()],
                           [((xs + 0.5) / seg.width).mean(), ((ys + 0.5) / seg.height).mean()],
                           t])


def lab_bin_index(lab: np.ndarray) -> np.ndarray:
    q = np.minimum((lab * HIST_BINS).astype(np.int64), HIST_BINS - 1)
    return (q[..., 0] * HIST_BINS + q[..., 1]) * HIST_BINS + q[..., 2]


def lab_histograms(seg) -> np.ndarray:
    """(n_regions, 512) normalized 8x8x8 Lab histograms."""
    nb = HIST_BINS ** 3
    flat = seg.labels.ravel().astype(np.int64) * nb + lab_bin_index(seg.lab).ravel()
    counts = np.bincount(flat, minlength=seg.n_regions * nb).reshape(-1, nb)
    return counts / seg.pixel_count[:, None]


def lab_histogram(sp, seg) -> np.ndarray:
    bins = lab_bin_index(seg.lab[seg.mask(sp.index)])
    return np.bincount(bins, minlength=HIST_BINS ** 3) / bins.size


def chi_square(h1, h2):
    """Half the chi-square distance; broadcasts over leading axes."""
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    return 0.5 * np.sum((h1 - h2) ** 2 / (h1 + h2 + EPS_DIV), axis=-1)


def pairwise_chi_square(H: np.ndarray, chunk: int = 64) -> np.ndarray:
    n = H.shape[0]
    out = np.empty((n, n))
    for start in range(0, n, chunk):
        out[start:start + chunk] = chi_square(H[start:start + chunk, None, :], H[None, :, :])
    return out


def affinity(chi2, depth_diff, lam_min, sigma2: float = 0.1):
    """exp(-(chi2 + lam_min * |d_m - d_n|) / sigma2)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return np.exp(-(np.asarray(chi2) + np.asarray(lam_min) * np.abs(depth_diff)) / sigma2)


def superpixel_affinity(h_m, h_n, d_m, d_n, lam_min, sigma2: float = 0.1):
    return affinity(chi_square(h_m, h_n), d_m - d_n, lam_min, sigma2)


def depth_confidence(depth: np.ndarray) -> DepthConfidence:
    depth = np.asarray(depth, dtype=np.float64)
    m = float(depth.mean())
    # exact zero for flat maps; np.std leaves rounding residue
    cv = 0.0 if depth.min() == depth.max() else float(depth.std() / max(m, EPS_DIV))
    hist = np.bincount(np.minimum((depth.ravel() * 256).astype(np.int64), 255), minlength=256)
    p = hist[hist > 0] / depth.size
    entropy = float(-(p * np.log(p)).sum() / np.log(256))
    lam = float(np.expm1((1.0 - m) * cv * entropy))
    return DepthConfidence(m, cv, entropy, max(lam, 0.0))
