"""Lasso reconstruction against a foreground dictionary.

The objective solved here is ``||f - D a||^2 + xi * ||a||_1`` (no 1/2 factor on
the quadratic term), so the coordinate update thresholds at ``xi / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DimensionMismatch

FEATURE_DIM = 27
DEFAULT_XI = 0.01
SWEEP_TOL = 1e-8
MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray  # (L, M), one column per seed feature
    provenance: str = "global"

    def __post_init__(self):
        if self.atoms.ndim != 2 or self.atoms.shape[1] < 1:
            raise DimensionMismatch(f"dictionary needs >= 1 column, got shape {self.atoms.shape}")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SparseCode:
    alpha: np.ndarray
    objective: float
    error: float
    sweeps: int


@numba.njit(cache=True)
def _cd_sweeps(D, colsq, r, xi, alpha, tol, max_sweeps):
    # Plain cyclic coordinate descent; `r` is the running residual f - D alpha.
    L, M = D.shape
    thresh = 0.5 * xi
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        max_delta = 0.0
        for j in range(M):
            nj = colsq[j]
            if nj == 0.0:
                continue
            aj = alpha[j]
            rho = nj * aj
            for i in range(L):
                rho += D[i, j] * r[i]
            if rho > thresh:
                new = (rho - thresh) / nj
            elif rho < -thresh:
                new = (rho + thresh) / nj
            else:
                new = 0.0
            delta = new - aj
            if delta != 0.0:
                for i in range(L):
                    r[i] -= delta * D[i, j]
                alpha[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            break
    return sweeps


@numba.njit(cache=True)
def _restricted_objective(G, b, x, xi):
    # x^T G x - 2 b^T x + xi |x|_1 (the constant f^T f is dropped)
    return x @ (G @ x) - 2.0 * (b @ x) + xi * np.sum(np.abs(x))


@numba.njit(cache=True)
def _chol_solve(C, b):
    n = b.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = b[i]
        for j in range(i):
            acc -= C[i, j] * y[j]
        y[i] = acc / C[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for j in range(i + 1, n):
            acc -= C[j, i] * x[j]
        x[i] = acc / C[i, i]
    return x


@numba.njit(cache=True)
def _feature_sign(G, Dtf, xi, x, opt_tol, max_iter):
    """Feature-sign active-set search on the Gram form of the lasso."""
    M = G.shape[0]
    theta = np.sign(x)
    for _ in range(max_iter):
        grad = 2.0 * (G @ x - Dtf)
        # activate the most violating zero coefficient
        best = -1
        best_val = xi + opt_tol
        for j in range(M):
            if x[j] == 0.0 and abs(grad[j]) > best_val:
                best_val = abs(grad[j])
                best = j
        if best >= 0:
            theta[best] = -np.sign(grad[best])
        else:
            ok = True
            for j in range(M):
                if x[j] != 0.0 and abs(grad[j] + xi * theta[j]) > opt_tol:
                    ok = False
                    break
            if ok:
                return True

        for _inner in range(max_iter):
            idx = np.nonzero(theta)[0]
            if idx.shape[0] == 0:
                break
            Gaa = np.ascontiguousarray(G[idx][:, idx])
            ba = Dtf[idx]
            x_old = x[idx]
            cur_obj = _restricted_objective(Gaa, ba, x_old, xi)
            chol_ok = True
            try:
                C = np.linalg.cholesky(Gaa)
                dmin = np.min(np.diag(C))
                if dmin * dmin <= 1e-12 * np.max(np.diag(Gaa)):
                    chol_ok = False
            except Exception:
                chol_ok = False
            if not chol_ok:
                w, V = np.linalg.eigh(Gaa)
            if not chol_ok and w[0] <= 1e-12 * w[-1]:
                # Dependent columns: moving along the null direction keeps the
                # residual fixed, so minimize the l1 term over its breakpoints.
                v = V[:, 0]
                best_x = x_old.copy()
                best_obj = cur_obj
                for q in range(idx.shape[0]):
                    if v[q] != 0.0:
                        t = -x_old[q] / v[q]
                        cand = x_old + t * v
                        cand[q] = 0.0
                        obj = _restricted_objective(Gaa, ba, cand, xi)
                        if obj < best_obj:
                            best_obj = obj
                            best_x = cand
            else:
                rhs = ba - 0.5 * xi * theta[idx]
                if chol_ok:
                    x_new = _chol_solve(C, rhs)
                else:
                    x_new = V @ ((V.T @ rhs) / w)
                # discrete line search over the endpoint and every sign crossing
                best_x = x_new.copy()
                best_obj = _restricted_objective(Gaa, ba, x_new, xi)
                for q in range(idx.shape[0]):
                    if x_old[q] != 0.0 and x_old[q] * x_new[q] < 0.0:
                        t = x_old[q] / (x_old[q] - x_new[q])
                        cand = x_old + t * (x_new - x_old)
                        cand[q] = 0.0
                        obj = _restricted_objective(Gaa, ba, cand, xi)
                        if obj < best_obj:
                            best_obj = obj
                            best_x = cand
            if best_obj > cur_obj:
                # no descent available on this face; drop zero coefficients
                for q in range(idx.shape[0]):
                    if x_old[q] == 0.0:
                        theta[idx[q]] = 0.0
                break
            for q in range(idx.shape[0]):
                x[idx[q]] = best_x[q]
                if best_x[q] == 0.0:
                    theta[idx[q]] = 0.0
                else:
                    theta[idx[q]] = np.sign(best_x[q])
            grad = 2.0 * (G @ x - Dtf)
            ok = True
            for j in range(M):
                if x[j] != 0.0 and abs(grad[j] + xi * theta[j]) > opt_tol:
                    ok = False
                    break
            if ok:
                break
    return False


@numba.njit(cache=True)
def _solve_batch(D, F, xi, tol, max_sweeps, use_feature_sign):
    L, M = D.shape
    n = F.shape[0]
    Dt = np.ascontiguousarray(D.T)
    G = Dt @ D
    colsq = np.diag(G).copy()
    A = np.zeros((n, M))
    sweeps = np.zeros(n, dtype=np.int64)
    for k in range(n):
        f = F[k]
        alpha = A[k]
        if use_feature_sign:
            _feature_sign(G, Dt @ f, xi, alpha, 1e-9, 10 * M + 100)
        r = f - D @ alpha
        sweeps[k] = _cd_sweeps(D, colsq, r, xi, alpha, tol, max_sweeps)
    return A, sweeps


def _as_atoms(D) -> np.ndarray:
    atoms = D.atoms if isinstance(D, Dictionary) else D
    return np.ascontiguousarray(atoms, dtype=np.float64)


def lasso_objective(D, f, alpha, xi) -> float:
    r = f - D @ alpha
    return float(r @ r + xi * np.abs(alpha).sum())


def kkt_residual(D, f, alpha, xi) -> float:
    """Largest violation of the subgradient optimality conditions."""
    grad = 2.0 * D.T @ (D @ alpha - f)
    nz = alpha != 0
    viol = np.empty_like(grad)
    viol[nz] = np.abs(grad[nz] + xi * np.sign(alpha[nz]))
    viol[~nz] = np.maximum(np.abs(grad[~nz]) - xi, 0.0)
    return float(viol.max()) if viol.size else 0.0


def lasso_solve(D, f, xi: float = DEFAULT_XI, tol: float = SWEEP_TOL,
                max_sweeps: int = MAX_SWEEPS, accelerate: bool = True) -> SparseCode:
    """Solve the lasso for a single feature vector.

    Cyclic coordinate descent finishes every solve and stops when the largest
    coordinate change in a sweep falls below `tol` (or after `max_sweeps`).
    With `accelerate` (the default) it is warm-started from a feature-sign
    active-set search, since correlated overcomplete dictionaries otherwise
    take thousands of sweeps; ``accelerate=False`` runs plain coordinate
    descent from zero.
    """
    atoms = _as_atoms(D)
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != atoms.shape[0]:
        raise DimensionMismatch(f"feature of shape {f.shape} vs dictionary {atoms.shape}")
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    F = np.ascontiguousarray(f[None, :])
    A, sweeps = _solve_batch(atoms, F, float(xi), float(tol), int(max_sweeps),
                           bool(accelerate))
    alpha = A[0]
    r = f - atoms @ alpha
    err = float(r @ r)
    return SparseCode(alpha, err + xi * float(np.abs(alpha).sum()), err, int(sweeps[0]))


def lasso_solve_batch(D, F, xi: float = DEFAULT_XI, tol: float = SWEEP_TOL,
                      max_sweeps: int = MAX_SWEEPS, accelerate: bool = True):
    """Solve one lasso problem per row of `F` against a shared dictionary.

    Returns ``(alphas, errors)`` with ``errors[k] = ||F[k] - D alphas[k]||^2``.
    """
    atoms = _as_atoms(D)
    F = np.ascontiguousarray(np.atleast_2d(F), dtype=np.float64)
    if F.shape[1] != atoms.shape[0]:
        raise DimensionMismatch(f"features of width {F.shape[1]} vs dictionary {atoms.shape}")
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    A, _ = _solve_batch(atoms, F, float(xi), float(tol), int(max_sweeps), bool(accelerate))
    R = F - A @ atoms.T
    return A, np.einsum("ij,ij->i", R, R)


def error_to_saliency(eps, sigma2: float = 0.1):
    """Map reconstruction error to saliency, exp(-eps / sigma2)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    return np.exp(-np.asarray(eps, dtype=np.float64) / sigma2)


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
