"""Multilevel sampling: locate scatterers from scattered-field data.

Each level backpropagates the data into the current sampling grid, forms a
pointwise contrast estimate, picks a cut-off from the first large gap in
the sorted contrast moduli, keeps the elements around every point above the
cut-off and refines them. Only matrix-vector products are used.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import instrument
from .errors import AllEqual, EmptyThresholdSet, NoScattererDetected, TooShort
from .forward import ScatterData, check_no_inverse_crime
from .mesh import SamplingBox, SamplingGrid, connected_components, create_uniform_grid, refine, select_around
from .physics import IncidenceSet, OperatorSet, assemble_operators

log = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-14


def backprop_source(u, ops: OperatorSet) -> np.ndarray:
    """Best approximation of the contrast source in ``span{GS* u}``.

    ``w = lam * GS* u`` with ``lam = |GS* u|_D^2 / |GS GS* u|_S^2``.
    """
    z = ops.apply("GS_adjoint", u)
    gz = ops.apply("GS", z)
    num = ops.norm_D(z) ** 2
    if num == 0.0:
        return np.zeros_like(z)
    den = ops.norm_S(gz) ** 2
    return (num / den) * z


def estimate_contrast(W, incidences: IncidenceSet, ops: OperatorSet) -> np.ndarray:
    """Pointwise least-squares fit of the state equation for ``chi``.

    ``W`` holds one contrast source per incidence (rows). Points whose
    total-field energy falls below ``1e-14`` of the maximum get ``chi = 0``.
    """
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    u_inc = incidences.fields(ops.k, ops.centers)
    total = np.stack([u_inc[j] + ops.apply("GD", W[j]) for j in range(len(W))])
    num = np.sum(W * np.conj(total), axis=0)
    den = np.sum(np.abs(total) ** 2, axis=0)
    chi = np.zeros_like(num)
    if den.size == 0:
        return chi
    ok = den >= DENOMINATOR_FLOOR * den.max()
    chi[ok] = num[ok] / den[ok]
    return chi


def smallest_distance(a) -> float:
    """Smallest strictly positive gap between neighbours of a sorted sequence."""
    a = np.asarray(a, dtype=float)
    if a.size < 2:
        raise TooShort("need at least two values")
    gaps = np.diff(a)
    positive = gaps[gaps > 0]
    if positive.size == 0:
        raise AllEqual("all neighbouring values coincide")
    return float(positive.min())


def first_gap_index(a, M: float) -> int | None:
    """0-based ``i`` of the first gap ``(a[i], a[i+1])`` with ``i >= 1`` whose
    width is at least ``M`` times the smallest positive gap among ``a[:i+1]``."""
    a = np.asarray(a, dtype=float)
    if a.size < 3:
        raise TooShort("need at least three values")
    gaps = np.diff(a)
    running = np.minimum.accumulate(np.where(gaps > 0, gaps, np.inf))
    # gap i is compared against the smallest positive gap among gaps[:i]
    hits = np.flatnonzero(gaps[1:] >= M * running[:-1]) + 1
    return int(hits[0]) if hits.size else None


def first_gap_interval(a, M: float) -> tuple[float, float] | None:
    a = np.asarray(a, dtype=float)
    i = first_gap_index(a, M)
    return None if i is None else (float(a[i]), float(a[i + 1]))


def next_cutoff(chi, c_prev: float, M: float) -> float:
    """Right end of the first gap among ``|chi| >= c_prev``; ``c_prev`` if none."""
    values = np.sort(np.abs(np.asarray(chi)))
    values = values[values >= c_prev]
    if values.size == 0:
        raise EmptyThresholdSet(f"no contrast modulus reaches the cut-off {c_prev}")
    if values.size < 3:
        return float(c_prev)
    gap = first_gap_interval(values, M)
    return float(c_prev) if gap is None else gap[1]


@dataclass
class Iteration:
    """State recorded at one level of the multilevel loop.

    ``grid`` is the level's sampling grid with ``active`` marking the
    elements kept after selection; ``chi`` is defined on every element of
    that grid (it was evaluated before selection).
    """

    level: int
    grid: SamplingGrid
    chi: np.ndarray
    cutoff: float
    n_components: int
    op_counts: dict
    seconds: float

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def above_cutoff(self) -> np.ndarray:
        return np.abs(self.chi) >= self.cutoff


@dataclass
class ReconstructionResult:
    box: SamplingBox
    M: float
    eps: float
    iterations: list[Iteration] = field(default_factory=list)
    converged: bool = False

    @property
    def cutoffs(self) -> list[float]:
        """Cut-off trace starting with ``c_0 = 0``."""
        return [0.0] + [it.cutoff for it in self.iterations]

    @property
    def final(self) -> Iteration:
        return self.iterations[-1]

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def component_counts(self) -> list[int]:
        return [it.n_components for it in self.iterations]


def multilevel_run(data: ScatterData, box: SamplingBox, h0: float, M: float = 100.0,
                   eps: float = 1e-3, k_max: int = 12,
                   max_elements: int = 8000) -> ReconstructionResult:
    """Run the multilevel loop from a uniform grid of size ``h0`` on ``box``.

    Stops when consecutive cut-offs differ by at most ``eps``. ``k_max``
    bounds the number of levels and ``max_elements`` the size of a refined
    grid (dense operators grow quadratically); hitting either leaves
    ``converged`` False.
    """
    if M <= 1 or eps <= 0 or k_max < 1:
        raise ValueError("need M > 1, eps > 0 and k_max >= 1")
    grid = create_uniform_grid(box, h0)
    result = ReconstructionResult(box, M, eps)
    fwd = data.meta.get("forward_lower"), data.meta.get("forward_h")
    c_prev = 0.0
    for level in range(k_max):
        t0 = time.perf_counter()
        if fwd[0] is not None:
            check_no_inverse_crime(fwd[0], fwd[1], grid)
        factorizations = instrument.COUNTS["factorization"]
        ops = assemble_operators(grid, data.receivers, data.k)
        W = np.stack([backprop_source(u, ops) for u in data.U])
        chi_active = estimate_contrast(W, data.incidences, ops)
        chi = np.zeros(grid.n_elements, dtype=complex)
        chi[ops.elements] = chi_active
        c = next_cutoff(chi_active, c_prev, M)
        flagged = ops.elements[np.abs(chi_active) >= c]
        kept = grid.with_active(select_around(grid, flagged))
        if level == 0 and not kept.active.any():
            raise NoScattererDetected("the first level retained no elements")
        assert instrument.COUNTS["factorization"] == factorizations
        it = Iteration(level, kept, chi, c, len(connected_components(kept)),
                       dict(ops.counts), time.perf_counter() - t0)
        result.iterations.append(it)
        log.info("level %d: h=%.4g, %d/%d kept, cut-off %.6g, %d component(s)",
                 level, grid.h, int(kept.active.sum()), grid.n_elements, c, it.n_components)
        if abs(c - c_prev) <= eps:
            result.converged = True
            break
        grid = refine(kept).active_subgrid()
        c_prev = c
        if grid.n_elements > max_elements:
            log.warning("stopping: refined grid has %d elements (limit %d)",
                        grid.n_elements, max_elements)
            break
    return result
