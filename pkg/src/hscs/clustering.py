"""K-means with K-means++ seeding, shared by texton learning and seed ranking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewSeeds


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray  # (k, dim)
    labels: np.ndarray  # (n,)
    distortion: float  # sum of squared distances to assigned centers
    n_iter: int


def sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = sq_dists(X, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point already coincides with a center
            centers[j] = X[rng.integers(n)]
        else:
            idx = np.searchsorted(np.cumsum(closest), rng.random() * total, side="right")
            centers[j] = X[min(idx, n - 1)]
        closest = np.minimum(closest, sq_dists(X, centers[j:j + 1])[:, 0])
    return centers


def kmeans(X, k: int, rng_seed: int = 0, max_iter: int = 100, tol: float = 1e-8) -> KMeansResult:
    """K-means++ seeding followed by Lloyd iterations.

    Stops when the distortion changes by less than `tol` or after `max_iter`
    iterations. An emptied cluster is re-seeded at the point farthest from
    its current center.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < k:
        raise TooFewSeeds(f"need at least {k} points, got {X.shape[0] if X.ndim == 2 else 0}")
    rng = np.random.default_rng(rng_seed)
    centers = kmeanspp_init(X, k, rng)
    prev = np.inf
    for it in range(1, max_iter + 1):
        d = sq_dists(X, centers)
        labels = d.argmin(1)
        point_d = d[np.arange(len(X)), labels]
        distortion = float(point_d.sum())
        for j in range(k):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(0)
            else:
                far = int(point_d.argmax())
                centers[j] = X[far]
                labels[far] = j
                point_d[far] = 0.0
        if abs(prev - distortion) < tol:
            break
        prev = distortion
    d = sq_dists(X, centers)
    labels = d.argmin(1)
    return KMeansResult(centers, labels, float(d[np.arange(len(X)), labels].sum()), it)
