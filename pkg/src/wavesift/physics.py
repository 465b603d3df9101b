"""Green's functions, plane waves and the discrete dipole operators.

Discrete operators act on values at the active element centres of a
:class:`~wavesift.mesh.SamplingGrid`:

* ``GD[m, n] = k^2 A g(x_m, x_n)`` for ``m != n`` and ``0`` on the diagonal,
* ``GS[q, n] = k^2 A g(x^s_q, x_n)``,
* ``GS*`` is the adjoint of ``GS`` for the weighted inner products
  ``<a, b>_D = sum A a conj(b)`` and ``<a, b>_S = sum s_q a_q conj(b_q)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ReceiverInsideDomain, SingularPoint
from .mesh import SamplingGrid
from .special import hankel0_first_kind

SINGULAR_TOL = 1e-12


def wavelength(k: float) -> float:
    return 2.0 * np.pi / k


def _check_k(k: float) -> float:
    k = float(k)
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    return k


@dataclass(frozen=True, eq=False)
class ReceiverSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.broadcast_to(np.asarray(self.weights, dtype=float), (len(pts),)).copy()
        if len(pts) < 1:
            raise ValueError("need at least one receiver")
        if np.any(w <= 0):
            raise ValueError("receiver weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class IncidenceSet:
    directions: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12):
            raise ValueError("incidence directions must be unit vectors")
        object.__setattr__(self, "directions", d)

    def __len__(self):
        return len(self.directions)

    def fields(self, k: float, points) -> np.ndarray:
        """``(N_i, n_points)`` array of incident plane waves."""
        return plane_wave(k, self.directions, points)


def green_of_distance(k: float, r, dim: int):
    """Outgoing free-space Green's function as a function of distance."""
    r = np.asarray(r, dtype=float)
    if dim == 2:
        return 0.25j * hankel0_first_kind(k * r)
    if dim == 3:
        return np.exp(1j * k * r) / (4.0 * np.pi * r)
    raise ValueError(f"dimension must be 2 or 3, got {dim}")


def green(k: float, x, xp, dim: int | None = None) -> complex:
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    dim = dim or x.shape[-1]
    r = float(np.linalg.norm(x - xp))
    if r < SINGULAR_TOL * wavelength(k):
        raise SingularPoint(f"Green's function is singular at coincident points ({r=})")
    return complex(green_of_distance(k, r, dim))


def plane_wave(k: float, direction, x):
    """``exp(i k d . x)``; broadcasts over several directions and points."""
    d = np.asarray(direction, dtype=float)
    pts = np.asarray(x, dtype=float)
    phase = np.tensordot(d, pts, axes=([-1], [-1]))
    out = np.exp(1j * k * phase)
    return complex(out) if out.ndim == 0 else out


def lattice_green_table(k: float, h: float, dim: int, max_sq: int) -> np.ndarray:
    """``g`` at distance ``h * sqrt(n)`` for integer ``n = 0 .. max_sq``.

    Entry 0 is set to zero, which removes the DDA self-term.
    """
    n = np.arange(max_sq + 1, dtype=float)
    table = np.zeros(max_sq + 1, dtype=complex)
    if max_sq > 0:
        table[1:] = green_of_distance(k, h * np.sqrt(n[1:]), dim)
    return table


def lattice_green_matrix(k: float, h: float, index: np.ndarray, weight: float) -> np.ndarray:
    """``weight * g(x_m, x_n)`` between lattice cells, zero on coincident cells."""
    index = np.asarray(index, dtype=np.int64)
    dim = index.shape[1]
    if len(index) == 0:
        return np.zeros((0, 0), dtype=complex)
    extent = index.max(axis=0) - index.min(axis=0)
    table = weight * lattice_green_table(k, h, dim, int(np.sum(extent**2)))
    idx = index.astype(np.int32)
    out = np.empty((len(index), len(index)), dtype=complex)
    for start in range(0, len(index), 1024):
        block = idx[start:start + 1024]
        sq = np.zeros((len(block), len(index)), dtype=np.int32)
        for axis in range(dim):
            diff = block[:, axis][:, None] - idx[:, axis][None, :]
            sq += diff * diff
        out[start:start + 1024] = table[sq]
    return out


@dataclass(eq=False)
class OperatorSet:
    """Discrete ``G_D``, ``G_S`` and ``G_S*`` for one (grid, receivers, k).

    Rows/columns follow ``elements``, the active element ids of ``grid``.
    ``counts`` tallies every :meth:`apply` call by operator kind.
    """

    grid: SamplingGrid
    receivers: ReceiverSet
    k: float
    elements: np.ndarray
    GD: np.ndarray
    GS: np.ndarray
    counts: Counter = field(default_factory=Counter)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def centers(self) -> np.ndarray:
        return self.grid.centers[self.elements]

    @property
    def measures(self) -> np.ndarray:
        return np.full(self.n_elements, self.grid.measure)

    @property
    def weights(self) -> np.ndarray:
        return self.receivers.weights

    def apply(self, kind: str, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if kind == "GD":
            mat, size = self.GD, self.n_elements
        elif kind == "GS":
            mat, size = self.GS, self.n_elements
        elif kind == "GS_adjoint":
            mat, size = None, len(self.receivers)
        else:
            raise ValueError(f"unknown operator kind {kind!r}")
        if v.shape != (size,):
            raise DimensionMismatch(f"{kind} expects a vector of length {size}, got {v.shape}")
        self.counts[kind] += 1
        if mat is not None:
            return mat @ v
        return (self.GS.conj().T @ (self.weights * v)) / self.grid.measure

    def inner_D(self, a, b) -> complex:
        return complex(self.grid.measure * np.sum(a * np.conj(b)))

    def inner_S(self, a, b) -> complex:
        return complex(np.sum(self.weights * a * np.conj(b)))

    def norm_D(self, a) -> float:
        return float(np.sqrt(self.inner_D(a, a).real))

    def norm_S(self, a) -> float:
        return float(np.sqrt(self.inner_S(a, a).real))


def check_receivers_outside(grid: SamplingGrid, receivers: ReceiverSet) -> None:
    if receivers.dim != grid.dim:
        raise DimensionMismatch("receiver and grid dimensions differ")
    inside = grid.box.contains(receivers.points)
    if np.any(inside):
        raise ReceiverInsideDomain(
            f"{int(inside.sum())} receiver(s) lie inside the sampling box {grid.box}"
        )


def assemble_operators(grid: SamplingGrid, receivers: ReceiverSet, k: float) -> OperatorSet:
    """Build the dipole operators over the active elements of ``grid``."""
    k = _check_k(k)
    check_receivers_outside(grid, receivers)
    elements = grid.active_elements
    weight = k * k * grid.measure
    GD = lattice_green_matrix(k, grid.h, grid.index[elements], weight)
    centers = grid.centers[elements]
    dist = np.linalg.norm(receivers.points[:, None, :] - centers[None, :, :], axis=-1)
    GS = weight * green_of_distance(k, dist, grid.dim)
    return OperatorSet(grid, receivers, k, elements, GD, np.asarray(GS, dtype=complex))
