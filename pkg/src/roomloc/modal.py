"""Modal model of a rectangular room with rigid walls.

Eigenfrequencies, cosine eigenfunctions, mode counting and the truncated
modal sum for the room transfer function (RTF).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

SPEED_OF_SOUND = 343.0
AIR_DENSITY = 1.2

# decay of 60 dB in energy: exp(-2 * delta * RT60) = 1e-6
_DECAY_CONSTANT = 3.0 * math.log(10.0)

# the 8 sign combinations of the plane waves making up one cosine mode
_SIGNS = np.array(list(itertools.product((1.0, -1.0), repeat=3)))


@dataclass(frozen=True)
class RoomSpec:
    """Rectangular room with rigid walls.

    Parameters
    ----------
    lx, ly, lz : float
        Room dimensions in meters.
    rt60 : float
        Reverberation time in seconds.
    c : float
        Speed of sound in m/s.
    rho0 : float
        Air density in kg/m^3.
    q_default : float
        Source volume flow used when no strength is given.
    """

    lx: float
    ly: float
    lz: float
    rt60: float = 0.5
    c: float = SPEED_OF_SOUND
    rho0: float = AIR_DENSITY
    q_default: float = 1.0

    def __post_init__(self):
        for name in ("lx", "ly", "lz", "rt60", "c", "rho0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.lx, self.ly, self.lz])

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz

    @property
    def surface(self) -> float:
        return 2.0 * (self.lx * self.ly + self.ly * self.lz + self.lz * self.lx)

    @property
    def edge_sum(self) -> float:
        return self.lx + self.ly + self.lz

    @property
    def damping(self) -> float:
        """Uniform modal damping coefficient 3 ln(10) / RT60 in 1/s."""
        return _DECAY_CONSTANT / self.rt60

    def contains(self, p: "Point3", atol: float = 0.0) -> bool:
        return all(-atol <= v <= L + atol for v, L in zip(p, self.dims))


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def of(cls, p) -> "Point3":
        if isinstance(p, Point3):
            return p
        x, y, z = (float(v) for v in p)
        return cls(x, y, z)


@dataclass(frozen=True, order=True)
class ModeIndex:
    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 0:
            raise ValueError(f"mode indices must be non-negative: {self.astuple()}")
        if self.nx == self.ny == self.nz == 0:
            raise ValueError("(0, 0, 0) is not a room mode")

    def astuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    def __str__(self):
        return f"({self.nx},{self.ny},{self.nz})"


@dataclass(frozen=True)
class Mode:
    """One room mode with its damping and normalization.

    ``k`` is the wave vector (n_x pi/L_x, n_y pi/L_y, n_z pi/L_z) in rad/m,
    ``omega_n`` the angular eigenfrequency, ``delta_n`` the damping in 1/s
    and ``kn_norm`` the normalization V * prod(1 if n == 0 else 1/2).
    """

    index: ModeIndex
    k: tuple[float, float, float]
    omega_n: float
    delta_n: float
    kn_norm: float = field(repr=False)

    @property
    def frequency(self) -> float:
        return self.omega_n / (2.0 * math.pi)


def _as_index(index) -> ModeIndex:
    return index if isinstance(index, ModeIndex) else ModeIndex(*(int(n) for n in index))


def eigenfrequency(index, room: RoomSpec) -> float:
    """Angular eigenfrequency in rad/s of mode ``index``."""
    index = _as_index(index)
    return math.pi * room.c * math.sqrt(
        (index.nx / room.lx) ** 2 + (index.ny / room.ly) ** 2 + (index.nz / room.lz) ** 2
    )


def schroeder_frequency(room: RoomSpec) -> float:
    """Schroeder frequency in Hz, 2000 sqrt(RT60 / V)."""
    return 2000.0 * math.sqrt(room.rt60 / room.volume)


def mode_count_estimate(f: float, room: RoomSpec) -> float:
    """Approximate number of modes with eigenfrequency below ``f`` Hz."""
    if f < 0:
        raise ValueError("frequency must be non-negative")
    x = f / room.c
    return (
        4.0 / 3.0 * math.pi * room.volume * x**3
        + 0.25 * math.pi * room.surface * x**2
        + 0.5 * room.edge_sum * x
    )


def make_mode(index, room: RoomSpec, damping: float | None = None) -> Mode:
    index = _as_index(index)
    n = np.array(index.astuple(), dtype=float)
    k = n * np.pi / room.dims
    # omega_n = c * |k| exactly, so both routes give the same float
    omega = room.c * float(np.linalg.norm(k))
    lam = float(np.prod(np.where(n == 0, 1.0, 0.5)))
    delta = room.damping if damping is None else float(damping)
    if not delta > 0:
        raise ValueError(f"damping for mode {index} must be positive")
    return Mode(index, tuple(float(v) for v in k), omega, delta, room.volume * lam)


def _sorted_modes(indices: Iterable, room: RoomSpec, damping: Mapping | None) -> list[Mode]:
    damping = {tuple(key): v for key, v in (damping or {}).items()}
    modes = [make_mode(i, room, damping.get(tuple(i))) for i in indices]
    modes.sort(key=lambda m: (m.omega_n, m.index.astuple()))
    return modes


def enumerate_modes_below(f_max: float, room: RoomSpec, damping: Mapping | None = None) -> list[Mode]:
    """All modes with eigenfrequency <= ``f_max`` Hz, sorted by frequency.

    ``damping`` optionally maps an index triple to a per-mode damping value.
    """
    if not f_max > 0:
        raise ValueError("f_max must be positive")
    omega_max = 2.0 * math.pi * f_max
    bound = [int(math.floor(2.0 * f_max * L / room.c)) for L in room.dims]
    indices = [
        n
        for n in itertools.product(*(range(b + 1) for b in bound))
        if any(n) and eigenfrequency(n, room) <= omega_max
    ]
    return _sorted_modes(indices, room, damping)


def enumerate_modes_in_index_cube(n_max: int, room: RoomSpec, damping: Mapping | None = None) -> list[Mode]:
    """Modes with all indices in 0..n_max (except the origin), sorted by frequency."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    indices = [n for n in itertools.product(range(n_max + 1), repeat=3) if any(n)]
    return _sorted_modes(indices, room, damping)


def eigenfunction(mode: Mode, p, room: RoomSpec | None = None) -> float:
    """Cosine-product eigenfunction of ``mode`` at point ``p`` (unit amplitude)."""
    x, y, z = Point3.of(p)
    kx, ky, kz = mode.k
    return math.cos(kx * x) * math.cos(ky * y) * math.cos(kz * z)


def eigenfunction_planewave(mode: Mode, p) -> complex:
    """Sum of the 8 plane waves exp(j (s * k) . p) over all sign vectors s."""
    k = np.asarray(mode.k)
    phases = (_SIGNS * k) @ Point3.of(p).as_array()
    return complex(np.exp(1j * phases).sum())


def eigenfunction_matrix(modes: Sequence[Mode], points) -> np.ndarray:
    """Eigenfunction values, shape (len(modes), len(points))."""
    k = np.array([m.k for m in modes], dtype=float)
    pts = np.atleast_2d(np.asarray([tuple(Point3.of(p)) for p in points], dtype=float))
    return np.prod(np.cos(k[:, None, :] * pts[None, :, :]), axis=2)


def rtf(mic, src, omega, modes: Sequence[Mode], room: RoomSpec, q: float | None = None):
    """Room transfer function from ``src`` to ``mic`` via the truncated modal sum.

    ``omega`` may be a scalar or an array of angular frequencies. The mic and
    source eigenfunctions enter as a product, so swapping them gives a
    bit-identical result.
    """
    if not modes:
        raise ValueError("need at least one mode")
    q = room.q_default if q is None else q
    xi = eigenfunction_matrix(modes, [mic, src])
    num = xi[:, 0] * xi[:, 1]
    wn = np.array([m.omega_n for m in modes])
    dn = np.array([m.delta_n for m in modes])
    kn = np.array([m.kn_norm for m in modes])
    w = np.asarray(omega, dtype=float)
    den = kn * (2.0 * dn * wn + 1j * (w[..., None] ** 2 - wn**2))
    h = room.rho0 * room.c**2 * w * q * np.sum(num / den, axis=-1)
    return complex(h) if h.ndim == 0 else h


def peak_scale(modes: Sequence[Mode], room: RoomSpec) -> np.ndarray:
    """Per-mode factor rho0 c^2 / (2 K_n delta_n) of the resonance peak height."""
    kn = np.array([m.kn_norm for m in modes])
    dn = np.array([m.delta_n for m in modes])
    return room.rho0 * room.c**2 / (2.0 * kn * dn)


def peak_height(mode: Mode, mic, src, room: RoomSpec, q: float | None = None) -> float:
    """Signed height of the mode's resonance peak for a mic/source pair."""
    q = room.q_default if q is None else q
    scale = room.rho0 * room.c**2 * q / (2.0 * mode.kn_norm * mode.delta_n)
    return scale * eigenfunction(mode, mic) * eigenfunction(mode, src)
