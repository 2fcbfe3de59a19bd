"""Foreground seed selection and the consistency-based ranking filter."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .clustering import kmeans
from .errors import KTooLarge, TooFewSeeds
from .features import DEPTH, FEATURE_DIM, affinity, pairwise_chi_square

CENTER_SCALE = 1.0 / math.sqrt(FEATURE_DIM)


@dataclass(frozen=True)
class Seed:
    image_index: int
    superpixel_index: int
    feature: np.ndarray
    hist: np.ndarray
    depth: float
    intra: float
    center: np.ndarray | None
    mc: float | None


@dataclass(frozen=True)
class SeedSet:
    """Column-aligned arrays, one row per seed, ordered by (image, superpixel)."""

    image_index: np.ndarray
    superpixel_index: np.ndarray
    features: np.ndarray  # (n, 27)
    hists: np.ndarray  # (n, 512)
    intra: np.ndarray  # S_a of each seed
    lam: np.ndarray  # depth confidence of the seed's image
    stage: str = "initial"
    centers: np.ndarray | None = None  # (n, 27) assigned center, scaled by 1/sqrt(27)
    cluster: np.ndarray | None = None
    mc: np.ndarray | None = None

    def __len__(self):
        return len(self.image_index)

    @property
    def depth(self) -> np.ndarray:
        return self.features[:, DEPTH]

    @property
    def seeds(self) -> list[Seed]:
        return [Seed(int(self.image_index[q]), int(self.superpixel_index[q]), self.features[q],
                     self.hists[q], float(self.depth[q]), float(self.intra[q]),
                     None if self.centers is None else self.centers[q],
                     None if self.mc is None else float(self.mc[q]))
                for q in range(len(self))]

    def subset(self, rows, stage: str) -> "SeedSet":
        rows = np.asarray(rows, dtype=np.int64)

        def take(a):
            return None if a is None else a[rows]

        return SeedSet(self.image_index[rows], self.superpixel_index[rows], self.features[rows],
                       self.hists[rows], self.intra[rows], self.lam[rows], stage,
                       take(self.centers), take(self.cluster), take(self.mc))


def top_k(values, K: int) -> np.ndarray:
    """Indices of the K largest values, ties going to the smaller index."""
    values = np.asarray(values)
    if K > len(values):
        raise KTooLarge(f"K={K} exceeds {len(values)} superpixels")
    order = np.lexsort((np.arange(len(values)), -values))
    return order[:K]


def select_initial_seeds(intra, K: int, features, hists, lams) -> SeedSet:
    """Union over images of the K superpixels with the largest intra saliency."""
    rows = []
    for i, values in enumerate(intra):
        values = getattr(values, "values", values)
        for m in np.sort(top_k(values, K)):
            rows.append((i, int(m), float(values[m])))
    img = np.array([r[0] for r in rows], dtype=np.int64)
    sp = np.array([r[1] for r in rows], dtype=np.int64)
    return SeedSet(img, sp,
                   np.stack([features[i][m] for i, m in zip(img, sp)]),
                   np.stack([hists[i][m] for i, m in zip(img, sp)]),
                   np.array([r[2] for r in rows]),
                   np.array([lams[i] for i in img], dtype=np.float64))


def kmeans_pp(seeds: SeedSet, k: int = 5, rng_seed: int = 0) -> SeedSet:
    """Cluster seed features (scaled by 1/sqrt(27)) and attach each seed's center."""
    if len(seeds) < k:
        raise TooFewSeeds(f"{len(seeds)} seeds for {k} clusters")
    result = kmeans(seeds.features * CENTER_SCALE, k, rng_seed=rng_seed)
    return replace(seeds, centers=result.centers[result.labels], cluster=result.labels)


def consistency_measure(seeds: SeedSet, sigma2: float = 0.1) -> np.ndarray:
    """mc for every seed: S_a times the center-closeness-weighted affinity to all others."""
    if seeds.centers is None:
        raise ValueError("cluster the seeds before scoring them")
    n = len(seeds)
    center_dist = np.linalg.norm(seeds.centers[:, None, :] - seeds.centers[None, :, :], axis=-1)
    closeness = np.clip(1.0 - center_dist, 0.0, None)
    lam_min = np.minimum(seeds.lam[:, None], seeds.lam[None, :])
    omega = affinity(pairwise_chi_square(seeds.hists),
                     seeds.depth[:, None] - seeds.depth[None, :], lam_min, sigma2)
    terms = closeness * omega
    terms[np.diag_indices(n)] = 0.0
    return terms.sum(1) * seeds.intra


def filter_seeds(seeds: SeedSet, keep_ratio: float = 0.8) -> SeedSet:
    """Keep the ceil(keep_ratio * n) seeds with the largest mc."""
    if seeds.mc is None:
        raise ValueError("compute mc before filtering")
    n = len(seeds)
    n_keep = min(n, math.ceil(keep_ratio * n - 1e-9))
    order = np.lexsort((seeds.superpixel_index, seeds.image_index, -seeds.mc))
    return seeds.subset(np.sort(order[:n_keep]), "final")


def rank_seeds(seeds: SeedSet, k_clusters: int = 5, keep_ratio: float = 0.8,
               sigma2: float = 0.1, rng_seed: int = 0) -> tuple[SeedSet, SeedSet]:
    """Cluster, score and filter; returns (scored initial set, final set)."""
    clustered = kmeans_pp(seeds, k_clusters, rng_seed)
    scored = replace(clustered, mc=consistency_measure(clustered, sigma2))
    return scored, filter_seeds(scored, keep_ratio)
