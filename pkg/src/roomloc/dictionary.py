"""Candidate grid, sensing dictionary and coherence diagnostics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .modal import Mode, Point3, RoomSpec, eigenfunction_matrix, peak_scale

ZERO_COLUMN_TOL = 1e-12


class DictionaryWarning(UserWarning):
    """Dictionary contains unobservable candidates or a poorly placed mic."""


@dataclass(frozen=True)
class CandidateGrid:
    """Cell-centred voxel grid of candidate source positions.

    Points are ordered by the linear index ``ix + gx * (iy + gy * iz)``.
    """

    dims: tuple[int, int, int]
    points: np.ndarray  # (M, 3)
    margin: float = 0.0

    def __len__(self):
        return len(self.points)

    @property
    def size(self) -> int:
        return len(self.points)

    def linear_index(self, ix: int, iy: int, iz: int) -> int:
        gx, gy, gz = self.dims
        if not (0 <= ix < gx and 0 <= iy < gy and 0 <= iz < gz):
            raise IndexError(f"cell {(ix, iy, iz)} outside grid {self.dims}")
        return ix + gx * (iy + gy * iz)

    def cell(self, idx: int) -> tuple[int, int, int]:
        gx, gy, _ = self.dims
        if not 0 <= idx < self.size:
            raise IndexError(f"grid index {idx} out of range")
        return idx % gx, (idx // gx) % gy, idx // (gx * gy)

    def point(self, idx: int) -> Point3:
        return Point3(*(float(v) for v in self.points[idx]))

    def nearest(self, p) -> int:
        """Grid index of the candidate closest to ``p``."""
        d = np.linalg.norm(self.points - Point3.of(p).as_array(), axis=1)
        return int(np.argmin(d))


def build_grid(room: RoomSpec, dims: Sequence[int], margin: float = 0.0) -> CandidateGrid:
    dims = tuple(int(g) for g in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"grid dims must be three positive integers, got {dims}")
    if margin < 0 or 2 * margin >= min(room.dims):
        raise ValueError(f"margin {margin} does not fit inside the room")
    axes = [
        margin + (np.arange(g) + 0.5) * (L - 2 * margin) / g for g, L in zip(dims, room.dims)
    ]
    # x varies fastest
    z, y, x = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    points = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    if np.any(points <= 0) or np.any(points >= room.dims):
        raise ValueError("grid points fall on or outside the room boundary")
    return CandidateGrid(dims, points, float(margin))


@dataclass(frozen=True)
class Dictionary:
    """Resonance peak heights, rows = modes, columns = candidate positions."""

    matrix: np.ndarray
    modes: tuple[Mode, ...]
    grid: CandidateGrid
    mic: Point3
    room: RoomSpec
    zero_columns: tuple[int, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def mic_factor(modes: Sequence[Mode], mic, room: RoomSpec) -> np.ndarray:
    """Per-row factor rho0 c^2 Xi_n(mic) / (2 K_n delta_n)."""
    return peak_scale(modes, room) * eigenfunction_matrix(modes, [mic])[:, 0]


def build_dictionary(modes: Sequence[Mode], grid: CandidateGrid, mic, room: RoomSpec) -> Dictionary:
    """Sensing matrix of peak heights for unit-strength sources on ``grid``.

    Built as the row-scaled eigenfunction matrix of the candidate positions.
    Candidates with a vanishing column and mic positions that silence more
    than half the modes raise a :class:`DictionaryWarning`.
    """
    if not len(modes) or not grid.size:
        raise ValueError("modes and grid must be non-empty")
    mic = Point3.of(mic)
    if not room.contains(mic):
        raise ValueError(f"mic {tuple(mic)} is outside the room")
    factor = mic_factor(modes, mic, room)
    matrix = factor[:, None] * eigenfunction_matrix(modes, grid.points)
    matrix.setflags(write=False)

    scale = np.abs(factor).max()
    silent = np.abs(factor) <= 1e-9 * scale if scale > 0 else np.ones_like(factor, bool)
    if silent.sum() > len(modes) / 2:
        warnings.warn(
            f"mic at {tuple(mic)} sits on nodal planes of {silent.sum()} of {len(modes)} modes",
            DictionaryWarning,
            stacklevel=2,
        )
    zero = np.flatnonzero(np.linalg.norm(matrix, axis=0) < ZERO_COLUMN_TOL)
    if zero.size:
        warnings.warn(f"{zero.size} candidate columns are identically zero", DictionaryWarning, stacklevel=2)
    return Dictionary(matrix, tuple(modes), grid, mic, room, tuple(int(i) for i in zero))


def _as_matrix(d) -> np.ndarray:
    return np.asarray(d.matrix if isinstance(d, Dictionary) else d, dtype=float)


def gram(d) -> np.ndarray:
    """Absolute Gram matrix |Phi^T Phi|.

    The Gram of the full sensing matrix including an orthogonal change of
    domain differs from this only by a constant factor, so the coherence
    computed from it is the same.
    """
    phi = _as_matrix(d)
    return np.abs(phi.T @ phi)


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    argmax_pair: tuple[int, int]
    histogram: tuple[tuple[float, ...], tuple[int, ...]]  # (bin edges, counts)
    max_sparsity_guarantee: int | None

    def to_dict(self) -> dict:
        edges, counts = self.histogram
        return {
            "mu": self.mu,
            "argmax_pair": list(self.argmax_pair),
            "histogram": {"edges": list(edges), "counts": list(counts)},
            "max_sparsity_guarantee": self.max_sparsity_guarantee,
        }


def coherence(d, bins: int = 20) -> CoherenceReport:
    """Mutual coherence and the sparsity level it guarantees.

    ``max_sparsity_guarantee`` is floor((1 + 1/mu) / 2), from the bound
    spark >= 1 + 1/mu; None when mu == 0 (no finite bound).
    """
    phi = _as_matrix(d)
    if phi.shape[1] < 2:
        raise ValueError("coherence needs at least two columns")
    norms = np.linalg.norm(phi, axis=0)
    if np.any(norms < ZERO_COLUMN_TOL):
        bad = np.flatnonzero(norms < ZERO_COLUMN_TOL)
        raise ValueError(f"zero columns at {bad[:10].tolist()}; coherence undefined")
    g = gram(phi / norms)
    iu = np.triu_indices(g.shape[0], k=1)
    off = np.clip(g[iu], 0.0, 1.0)
    pos = int(np.argmax(off))
    mu = float(off[pos])
    counts, edges = np.histogram(off, bins=bins, range=(0.0, 1.0))
    guarantee = math.floor((1.0 + 1.0 / mu) / 2.0) if mu > 0 else None
    return CoherenceReport(
        mu,
        (int(iu[0][pos]), int(iu[1][pos])),
        (tuple(float(e) for e in edges), tuple(int(c) for c in counts)),
        guarantee,
    )


def write_matrix_csv(d: Dictionary, path) -> None:
    """Dump the dictionary as CSV with a ``#`` metadata header."""
    room = d.room
    lines = [
        f"# room: {room.lx}x{room.ly}x{room.lz}",
        f"# rt60: {room.rt60}",
        f"# c: {room.c}",
        f"# rho0: {room.rho0}",
        f"# mic: {d.mic.x},{d.mic.y},{d.mic.z}",
        "# grid: {}x{}x{}".format(*d.grid.dims),
        f"# margin: {d.grid.margin}",
        "# modes: " + " ".join(str(m.index) for m in d.modes),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, d.matrix, delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`write_matrix_csv`: (metadata, matrix)."""
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
    matrix = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return meta, matrix
