"""Global and pairwise dictionary reconstruction, fused into inter saliency."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySeedSet, LengthMismatch, SingleImageGroup
from .intra_saliency import SaliencyMap
from .seed_ranking import top_k
from .sparse_coding import DEFAULT_XI, Dictionary, error_to_saliency, lasso_solve_batch


@dataclass(frozen=True)
class InterSaliencyBundle:
    S_gr: list
    S_pr: list
    S_r: list
    # S_pr_k[i][k] is image i reconstructed by image k's dictionary
    S_pr_k: list = field(default_factory=list)


def build_global_dictionary(final_seeds) -> Dictionary:
    if len(final_seeds) == 0:
        raise EmptySeedSet("no final seeds to build the global dictionary")
    # SeedSet rows are already in (image, superpixel) order
    return Dictionary(np.ascontiguousarray(final_seeds.features.T), "global")


def reconstruction_saliency(D: Dictionary, features: np.ndarray, xi: float = DEFAULT_XI,
                            sigma2: float = 0.1) -> np.ndarray:
    _, errors = lasso_solve_batch(D, features, xi)
    return error_to_saliency(errors, sigma2)


def global_inter(features, D: Dictionary, xi: float = DEFAULT_XI, sigma2: float = 0.1,
                 ids=None) -> list[SaliencyMap]:
    ids = ids or [""] * len(features)
    return [SaliencyMap(reconstruction_saliency(D, f, xi, sigma2), image_id)
            for f, image_id in zip(features, ids)]


def build_pairwise_dictionaries(intra, K: int, features) -> list[Dictionary]:
    """One dictionary per image from its own top-K intra-saliency superpixels."""
    dicts = []
    for k, (values, f) in enumerate(zip(intra, features)):
        values = getattr(values, "values", values)
        rows = np.sort(top_k(values, K))
        dicts.append(Dictionary(np.ascontiguousarray(f[rows].T), f"pairwise({k})"))
    return dicts


def pairwise_inter(i: int, features_i: np.ndarray, dicts, xi: float = DEFAULT_XI,
                   sigma2: float = 0.1, image_id: str = ""):
    """Average over k != i of image i reconstructed with dictionary k.

    Returns ``(S_pr, {k: S_pr^k})``.
    """
    if len(dicts) < 2:
        raise SingleImageGroup("pairwise reconstruction needs at least two images")
    per_k = {k: reconstruction_saliency(D, features_i, xi, sigma2)
             for k, D in enumerate(dicts) if k != i}
    mean = np.mean(np.stack(list(per_k.values())), axis=0)
    return SaliencyMap(mean, image_id), per_k


def fuse_hierarchical(S_gr, S_pr) -> SaliencyMap:
    a = getattr(S_gr, "values", S_gr)
    b = getattr(S_pr, "values", S_pr)
    if np.shape(a) != np.shape(b):
        raise LengthMismatch(f"{np.shape(a)} vs {np.shape(b)}")
    return SaliencyMap(0.5 * (np.asarray(a) + np.asarray(b)), getattr(S_gr, "image_id", ""))


def compute_inter(features, intra, final_seeds, K: int, xi: float = DEFAULT_XI,
                  sigma2: float = 0.1, ids=None) -> InterSaliencyBundle:
    ids = ids or [""] * len(features)
    D_gf = build_global_dictionary(final_seeds)
    S_gr = global_inter(features, D_gf, xi, sigma2, ids)
    dicts = build_pairwise_dictionaries(intra, K, features)
    S_pr, S_pr_k = [], []
    for i, f in enumerate(features):
        s, per_k = pairwise_inter(i, f, dicts, xi, sigma2, ids[i])
        S_pr.append(s)
        S_pr_k.append(per_k)
    S_r = [fuse_hierarchical(g, p) for g, p in zip(S_gr, S_pr)]
    return InterSaliencyBundle(S_gr, S_pr, S_r, S_pr_k)
