"""Single-microphone source localization by randomized dictionary subsampling.

Each attempt keeps a random subset of resonant-frequency rows and of
candidate-position columns, and runs CoSaMP on the reduced system. The
first attempt whose residual vanishes (relative residual <= tol) gives the
source positions.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dictionary import Dictionary
from .modal import Mode, Point3, RoomSpec, eigenfunction_matrix, peak_scale
from .sparse import DEFAULT_TOL, cosamp

DEFAULT_MAX_OUTER = 300
DEFAULT_INNER_ITER = 50
MIDPLANE_TOL = 0.01


class MicPlacementError(ValueError):
    """Mic lies (nearly) on a plane of symmetry of the room."""


@dataclass(frozen=True)
class SubsamplingScheme:
    row_keep: int
    col_factor: float = 1.0
    seed: int = 0

    def columns_kept(self, m: int) -> int:
        return int(round(m / self.col_factor))

    def validate(self, n: int, m: int) -> None:
        if not 1 <= self.row_keep <= n:
            raise ValueError(f"row_keep={self.row_keep} outside 1..{n}")
        if self.col_factor < 1:
            raise ValueError("col_factor must be >= 1")
        if not 1 <= self.columns_kept(m) <= m:
            raise ValueError(f"col_factor={self.col_factor} keeps no columns of {m}")


@dataclass(frozen=True)
class Measurement:
    values: np.ndarray
    snr_db: float | None = None


@dataclass
class LocalizationResult:
    positions: list[Point3]
    grid_indices: list[int]
    coefficients: list[float]
    outer_iterations: int
    converged: bool
    elapsed: float
    final_residual: float
    relative_residual: float
    inner_iterations: int = 0
    kept_columns: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "positions": [list(p) for p in self.positions],
            "grid_indices": list(self.grid_indices),
            "coefficients": list(self.coefficients),
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.inner_iterations,
            "converged": self.converged,
            "elapsed": self.elapsed,
            "final_residual": self.final_residual,
            "relative_residual": self.relative_residual,
        }


def check_mic_placement(mic, room: RoomSpec, tol: float = MIDPLANE_TOL) -> None:
    """Raise if the mic is within ``tol`` of a room dimension from a midplane."""
    for name, v, L in zip("xyz", Point3.of(mic), room.dims):
        if abs(v - L / 2) <= tol * L:
            raise MicPlacementError(
                f"mic {name}={v} is on the {name}-midplane (L={L}); "
                "mirror-image positions become indistinguishable"
            )


def noise_tolerance(snr_db: float | None) -> float:
    """Default convergence threshold for a given measurement SNR."""
    if snr_db is None or math.isinf(snr_db):
        return DEFAULT_TOL
    return 2.0 * 10.0 ** (-snr_db / 20.0)


def synthesize_measurement(
    sources: Sequence,
    modes: Sequence[Mode],
    mic,
    room: RoomSpec,
    snr_db: float | None = None,
    seed: int = 0,
) -> Measurement:
    """Peak heights observed at the mic for a set of ``(position, strength)`` sources.

    With ``snr_db`` white Gaussian noise is added, scaled so that the
    clean-to-noise energy ratio is exactly ``snr_db``.
    """
    if not sources:
        raise ValueError("need at least one source")
    mic = Point3.of(mic)
    pos, q = [], []
    for s in sources:
        p, strength = (s, room.q_default) if isinstance(s, Point3) else s
        p = Point3.of(p)
        if not room.contains(p):
            raise ValueError(f"source {tuple(p)} is outside the room")
        if p == mic:
            raise ValueError("source coincides with the microphone")
        pos.append(p)
        q.append(float(strength))
    xi = eigenfunction_matrix(modes, [mic, *pos])
    heights = (peak_scale(modes, room) * xi[:, 0])[:, None] * xi[:, 1:]
    values = heights @ np.array(q)
    if snr_db is not None and not math.isinf(snr_db):
        noise = np.random.default_rng(seed).standard_normal(values.shape)
        noise *= np.linalg.norm(values) / (np.linalg.norm(noise) * 10.0 ** (snr_db / 20.0))
        values = values + noise
    return Measurement(values, snr_db)


def subsample(d, meas, scheme: SubsamplingScheme, rng: np.random.Generator):
    """Random row/column restriction of the system.

    Returns ``(sub_matrix, sub_values, kept_rows, kept_cols)``; index arrays
    are sorted and map sub-problem positions back to the full dictionary.
    """
    phi = d.matrix if isinstance(d, Dictionary) else np.asarray(d)
    y = meas.values if isinstance(meas, Measurement) else np.asarray(meas)
    n, m = phi.shape
    scheme.validate(n, m)
    rows = np.sort(rng.choice(n, scheme.row_keep, replace=False))
    cols = np.sort(rng.choice(m, scheme.columns_kept(m), replace=False))
    return phi[np.ix_(rows, cols)], y[rows], rows, cols


def attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    """Independent stream for one outer attempt."""
    return np.random.default_rng([seed, attempt])


def localize(
    d: Dictionary,
    meas: Measurement,
    k: int,
    scheme: SubsamplingScheme,
    max_outer: int = DEFAULT_MAX_OUTER,
    tol: float | None = None,
    inner_max_iter: int = DEFAULT_INNER_ITER,
    allow_symmetric_mic: bool = False,
) -> LocalizationResult:
    """Resample and retry CoSaMP until a sub-problem is solved exactly.

    Gives up after ``max_outer`` attempts and then reports the attempt with
    the smallest relative residual with ``converged=False``. When the
    scheme keeps every row and column, all attempts are identical, so a
    single failure ends the search.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    y = meas.values
    n, m = d.shape
    if y.shape != (n,):
        raise ValueError(f"measurement length {y.shape} does not match {n} dictionary rows")
    if not allow_symmetric_mic:
        check_mic_placement(d.mic, d.room)
    if tol is None:
        tol = noise_tolerance(meas.snr_db)
    scheme.validate(n, m)
    exhaustive = scheme.row_keep == n and scheme.columns_kept(m) == m

    start = time.perf_counter()
    best = None
    inner = 0
    attempt = 0
    for attempt in range(1, max_outer + 1):
        sub, sub_y, _, cols = subsample(d.matrix, y, scheme, attempt_rng(scheme.seed, attempt))
        sol = cosamp(sub, sub_y, k, max_iter=inner_max_iter, tol=tol)
        inner += sol.iterations
        if best is None or sol.relative_residual < best[0].relative_residual:
            best = (sol, cols)
        if sol.relative_residual <= tol or exhaustive:
            break
    elapsed = time.perf_counter() - start

    sol, cols = best
    order = np.argsort(cols[sol.support], kind="stable")
    idx = [int(i) for i in cols[sol.support][order]]
    return LocalizationResult(
        positions=[d.grid.point(i) for i in idx],
        grid_indices=idx,
        coefficients=[float(c) for c in sol.coefficients[order]],
        outer_iterations=attempt,
        converged=bool(sol.relative_residual <= tol),
        elapsed=elapsed,
        final_residual=float(sol.residual_norm),
        relative_residual=float(sol.relative_residual),
        inner_iterations=inner,
        kept_columns=cols,
    )
