"""Energy-based refinement: data term, spatial smoothness and holistic consistency.

The energy

    E(x) = sum_m (x_m - s_m)^2 + sum_{m~n} w_mn (x_m - x_n)^2 + sum_m g_m x_m^2

(with each unordered adjacent pair counted once) is minimized in closed form
by solving ``(I + (Dg - W) + G) x = s``. W only couples superpixels of the
same image, so the system is solved block by block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import LengthMismatch, SolverFailure
from .features import affinity, chi_square
from .intra_saliency import minmax

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RefinementProblem:
    s: np.ndarray  # (aleph,) initial saliency
    W: sp.csr_matrix  # symmetric within-image affinities
    g: np.ndarray  # holistic penalties
    offsets: np.ndarray  # block boundaries, len N+1
    smooth_weight: float = 1.0
    holistic_weight: float = 1.0

    @property
    def degree(self) -> np.ndarray:
        return np.asarray(self.W.sum(axis=1)).ravel()

    @property
    def laplacian(self) -> sp.csr_matrix:
        return (sp.diags(self.degree) - self.W).tocsr()

    def system_matrix(self) -> sp.csr_matrix:
        n = len(self.s)
        return (sp.identity(n, format="csr") + self.smooth_weight * self.laplacian
                + self.holistic_weight * sp.diags(self.g)).tocsr()

    def blocks(self):
        return [slice(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]


@dataclass(frozen=True)
class GlobalForegroundModel:
    h_g: np.ndarray
    n_samples: int


def initial_saliency(S_a, S_r, normalize: bool = True) -> np.ndarray:
    a = np.asarray(getattr(S_a, "values", S_a), dtype=np.float64)
    r = np.asarray(getattr(S_r, "values", S_r), dtype=np.float64)
    if a.shape != r.shape:
        raise LengthMismatch(f"{a.shape} vs {r.shape}")
    prod = a * r
    return minmax(prod) if normalize else prod


def global_foreground_model(s_list, hists_list, top_fg: int = 20) -> GlobalForegroundModel:
    """Mean Lab histogram of each image's top superpixels by initial saliency."""
    picked = []
    for s, hists in zip(s_list, hists_list):
        s = np.asarray(s)
        n = min(top_fg, len(s))
        order = np.lexsort((np.arange(len(s)), -s))[:n]
        picked.append(hists[order])
    samples = np.concatenate(picked)
    h = samples.mean(0)
    return GlobalForegroundModel(h / h.sum(), len(samples))


def consistency_penalty(h_m, model: GlobalForegroundModel):
    return chi_square(h_m, model.h_g)


def build_system(s_list, edges_list, hists_list, depth_list, lams, model,
                 sigma2: float = 0.1, smooth_weight: float = 1.0,
                 holistic_weight: float = 1.0) -> RefinementProblem:
    """Assemble the block-diagonal system for the whole group.

    `edges_list[i]` holds image i's unordered adjacent pairs; the affinity uses
    that image's depth confidence for both ends.
    """
    sizes = [len(s) for s in s_list]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    rows, cols, vals = [], [], []
    for i, (edges, hists, depth) in enumerate(zip(edges_list, hists_list, depth_list)):
        if len(edges) == 0:
            continue
        m, n = edges[:, 0], edges[:, 1]
        w = affinity(chi_square(hists[m], hists[n]), depth[m] - depth[n], lams[i], sigma2)
        rows += [m + offsets[i], n + offsets[i]]
        cols += [n + offsets[i], m + offsets[i]]
        vals += [w, w]
    total = int(offsets[-1])
    if rows:
        W = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(total, total))
    else:
        W = sp.csr_matrix((total, total))
    g = np.concatenate([consistency_penalty(h, model) for h in hists_list])
    return RefinementProblem(np.concatenate([np.asarray(s, dtype=np.float64) for s in s_list]),
                             W, g, offsets, smooth_weight, holistic_weight)


def _solve_checked(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    if A.shape[0] == 0:
        return np.zeros(0)
    A = A.tocsc()
    x = np.atleast_1d(spsolve(A, b))
    bnorm = max(np.linalg.norm(b), 1e-300)
    for _ in range(3):
        r = b - A @ x
        if np.linalg.norm(r) / bnorm <= RESIDUAL_TOL:
            return x
        x = x + np.atleast_1d(spsolve(A, r))
    if np.linalg.norm(b - A @ x) / bnorm <= RESIDUAL_TOL:
        return x
    raise SolverFailure("refinement system did not reach the residual tolerance")


def solve_system(p: RefinementProblem, per_image: bool = True) -> np.ndarray:
    """Raw minimizer of the energy, before any normalization."""
    A = p.system_matrix()
    if not per_image:
        return _solve_checked(A, p.s)
    out = np.empty_like(p.s)
    for blk in p.blocks():
        out[blk] = _solve_checked(A[blk, blk], p.s[blk])
    return out


def solve_refinement(p: RefinementProblem) -> np.ndarray:
    """Refined saliency, min-max normalized within each image."""
    x = solve_system(p)
    for blk in p.blocks():
        x[blk] = minmax(x[blk])
    return x


def energy_terms(p: RefinementProblem, x: np.ndarray) -> tuple[float, float, float]:
    coo = sp.triu(p.W, k=1).tocoo()
    unary = float(np.sum((x - p.s) ** 2))
    smooth = float(np.sum(coo.data * (x[coo.row] - x[coo.col]) ** 2))
    holistic = float(np.sum(p.g * x ** 2))
    return unary, smooth, holistic


def energy(p: RefinementProblem, x: np.ndarray) -> float:
    unary, smooth, holistic = energy_terms(p, x)
    return unary + p.smooth_weight * smooth + p.holistic_weight * holistic


def energy_gradient(p: RefinementProblem, x: np.ndarray) -> np.ndarray:
    return (2.0 * (x - p.s) + 2.0 * p.smooth_weight * (p.laplacian @ x)
            + 2.0 * p.holistic_weight * p.g * x)


def superpixel_to_pixel(values, seg) -> np.ndarray:
    return np.asarray(values, dtype=np.float64)[seg.labels]
