"""Greedy sparse recovery: OMP and CoSaMP with least-squares refits.

Both solvers select atoms by correlation with the residual divided by the
column norm, so that atoms with very different energies compete fairly.
Coefficients are returned in the scale of the original columns. Ties are
broken towards the lowest column index.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_TOL = 1e-6


class LstsqResult(NamedTuple):
    coefficients: np.ndarray
    residual_norm: float
    rank_deficient: bool


@dataclass
class SparseSolution:
    support: np.ndarray
    coefficients: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    relative_residual: float = np.nan
    residual_history: list[float] = field(default_factory=list)

    def to_dense(self, m: int) -> np.ndarray:
        x = np.zeros(m)
        x[self.support] = self.coefficients
        return x


def least_squares_on_support(phi: np.ndarray, y: np.ndarray, support: Sequence[int]) -> LstsqResult:
    """Minimize ||y - phi[:, support] c||; minimum-norm if the columns are dependent."""
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise ValueError("support must be non-empty")
    sub = phi[:, support]
    coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
    resid = float(np.linalg.norm(y - sub @ coef))
    return LstsqResult(coef, resid, bool(rank < support.size))


def _check(phi, y, k):
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if phi.ndim != 2 or y.shape != (phi.shape[0],):
        raise ValueError(f"shape mismatch: phi {phi.shape}, y {y.shape}")
    if k < 1:
        raise ValueError("sparsity k must be >= 1")
    if k > phi.shape[0]:
        raise ValueError(f"sparsity k={k} exceeds the number of rows {phi.shape[0]}")
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0:
        raise ValueError("measurement y is zero")
    norms = np.linalg.norm(phi, axis=0)
    # zero columns can never be selected
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return phi, y, ynorm, norms, inv


def omp(phi, y, k: int, tol: float = DEFAULT_TOL) -> SparseSolution:
    """Orthogonal matching pursuit, at most ``k`` atoms."""
    phi, y, ynorm, _, inv = _check(phi, y, k)
    support: list[int] = []
    r = y
    coef = np.zeros(0)
    history = [1.0]
    rel = 1.0
    for it in range(1, k + 1):
        score = np.abs(phi.T @ r) * inv
        score[support] = -1.0
        support.append(int(np.argmax(score)))
        coef, resid, _ = least_squares_on_support(phi, y, support)
        r = y - phi[:, support] @ coef
        rel = resid / ynorm
        history.append(rel)
        if rel <= tol:
            break
    order = np.argsort(support)
    return SparseSolution(
        np.array(support)[order], coef[order], rel * ynorm, it, rel <= tol, rel, history
    )


def cosamp(phi, y, k: int, max_iter: int = 50, tol: float = DEFAULT_TOL) -> SparseSolution:
    """Compressive sampling matching pursuit.

    Each iteration merges the 2k strongest proxy atoms with the current
    support, refits, prunes to the k largest (norm-weighted) coefficients
    and refits again on the pruned support. Stops on ``tol``, ``max_iter``
    or when the relative residual decreases by less than 1e-10 relative.
    """
    phi, y, ynorm, norms, inv = _check(phi, y, k)
    n, m = phi.shape
    if 2 * k > n:
        warnings.warn(f"CoSaMP with 2k={2 * k} > rows={n}", RuntimeWarning, stacklevel=2)
    support = np.zeros(0, dtype=int)
    coef = np.zeros(0)
    r = y
    rel = 1.0
    history = [1.0]
    it = 0
    for it in range(1, max_iter + 1):
        proxy = np.abs(phi.T @ r) * inv
        top = np.argsort(-proxy, kind="stable")[: 2 * k]
        merged = np.union1d(support, top)
        b, _, _ = least_squares_on_support(phi, y, merged)
        keep = np.argsort(-np.abs(b) * norms[merged], kind="stable")[:k]
        support = np.sort(merged[keep])
        coef, resid, _ = least_squares_on_support(phi, y, support)
        r = y - phi[:, support] @ coef
        prev, rel = rel, resid / ynorm
        history.append(rel)
        if rel <= tol or prev - rel < 1e-10 * prev:
            break
    return SparseSolution(support, coef, rel * ynorm, it, rel <= tol, rel, history)
