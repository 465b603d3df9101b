"""Synthetic scattered-field data from a phantom via the discrete dipole system.

The state equation ``(I - diag(chi) GD) w_j = diag(chi) u_inc_j`` is solved
densely on a forward mesh, restricted to cells where ``chi`` is nonzero
(elsewhere ``w`` vanishes identically). The forward mesh is finer than the
inversion meshes and shifted off their lattice to avoid an inverse crime.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from . import instrument
from .errors import DimensionMismatch, InverseCrime, SingularSystem
from .mesh import SamplingBox, SamplingGrid
from .physics import (IncidenceSet, OperatorSet, ReceiverSet, assemble_operators,
                      wavelength)
from .scenarios import Phantom

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
# fraction of a forward cell by which the forward lattice is shifted
LATTICE_SHIFT = 0.5 * (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ScatterData:
    """Measurements ``U[j, q]`` for incidence ``j`` and receiver ``q``."""

    U: np.ndarray
    receivers: ReceiverSet
    incidences: IncidenceSet
    k: float
    xi: float = 0.0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        if U.shape != (len(self.incidences), len(self.receivers)):
            raise DimensionMismatch(
                f"data shape {U.shape} does not match "
                f"{len(self.incidences)} incidences x {len(self.receivers)} receivers"
            )
        if not np.all(np.isfinite(U)):
            raise ValueError("scattered data contain non-finite entries")
        object.__setattr__(self, "U", U)

    @property
    def dim(self) -> int:
        return self.receivers.dim


def forward_grid(phantom: Phantom, k: float, h: float | None = None,
                 margin: float = 0.1) -> SamplingGrid:
    """Fine mesh over the phantom bounding box, keeping cells where chi != 0.

    The default cell size is lambda/40 in 2D and lambda/16 in 3D. The box is
    enlarged by ``margin`` and shifted by an irrational fraction of a cell.
    """
    lam = wavelength(k)
    if h is None:
        h = lam / 40.0 if phantom.dim == 2 else lam / 16.0
    bb = phantom.bbox
    center = (np.asarray(bb.lower) + np.asarray(bb.upper)) / 2.0
    side = (1.0 + margin) * bb.sides
    n = np.ceil(side / h).astype(int) + 1
    lower = center - n * h / 2.0 + LATTICE_SHIFT * h
    box = SamplingBox(tuple(lower), tuple(lower + n * h))
    axes = [np.arange(m) for m in n]
    index = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, phantom.dim)
    centers = lower + (index + 0.5) * h
    keep = phantom.contrast(centers) != 0
    if not np.any(keep):
        warnings.warn("phantom support contains no forward-mesh cell centre", stacklevel=2)
    return SamplingGrid(box, 0, float(h), index[keep])


def check_no_inverse_crime(forward_lower, forward_h: float, grid: SamplingGrid) -> None:
    """Raise if a forward lattice would put cell centres on the inversion grid's."""
    if not np.isclose(forward_h, grid.h, rtol=1e-9, atol=0.0):
        return
    shift = (np.asarray(forward_lower) - np.asarray(grid.box.lower)) / grid.h
    if np.allclose(shift, np.rint(shift), atol=1e-6):
        raise InverseCrime(f"forward and inversion meshes coincide at h={grid.h}")


def solve_state(phantom: Phantom, grid: SamplingGrid, ops: OperatorSet,
                incidences: IncidenceSet) -> np.ndarray:
    """Contrast sources ``w_j`` (rows) on the active cells of ``grid``."""
    lam = wavelength(ops.k)
    if grid.h > lam / 10.0 * (1 + 1e-12):
        warnings.warn(f"forward mesh h={grid.h:.4g} is coarser than lambda/10", stacklevel=2)
    chi = phantom.contrast(ops.centers)
    u_inc = incidences.fields(ops.k, ops.centers)
    M = ops.n_elements
    if M == 0:
        return np.zeros((len(incidences), 0), dtype=complex)
    system = np.eye(M, dtype=complex) - chi[:, None] * ops.GD
    rhs = (chi[None, :] * u_inc).T
    instrument.count("factorization")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(system, check_finite=True)
        except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise SingularSystem(f"state equation is singular: {exc}") from exc
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * M * pivots.max():
        raise SingularSystem("state equation is numerically rank deficient")
    W = scipy.linalg.lu_solve((lu, piv), rhs)
    residual = np.linalg.norm(system @ W - rhs) / max(np.linalg.norm(rhs), 1e-300)
    log.debug("state solve: %d unknowns, %d incidences, residual %.2e", M, len(incidences), residual)
    if residual > RESIDUAL_TOL:
        raise SingularSystem(f"state solve residual {residual:.2e} exceeds {RESIDUAL_TOL}")
    return W.T


def synth_scattered(W, ops: OperatorSet, incidences: IncidenceSet) -> ScatterData:
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    if W.shape[1] != ops.n_elements:
        raise DimensionMismatch(f"sources have {W.shape[1]} cells, operators {ops.n_elements}")
    U = W @ ops.GS.T
    return ScatterData(U, ops.receivers, incidences, ops.k)


def add_noise(data: ScatterData, xi: float, seed: int | None = None) -> ScatterData:
    """Multiply each entry by ``1 + xi (r1 + i r2)``, ``r1, r2 ~ U[-1, 1]``.

    Uses a PCG64 generator seeded with ``seed``; the input is left untouched.
    """
    if xi < 0:
        raise ValueError("noise level must be nonnegative")
    if xi == 0:
        return replace(data, xi=0.0, seed=seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    r1 = rng.uniform(-1.0, 1.0, size=data.U.shape)
    r2 = rng.uniform(-1.0, 1.0, size=data.U.shape)
    return replace(data, U=data.U * (1.0 + xi * (r1 + 1j * r2)), xi=float(xi), seed=seed)


def synthesize(phantom: Phantom, receivers: ReceiverSet, incidences: IncidenceSet,
               k: float, h: float | None = None) -> ScatterData:
    """Noiseless data for ``phantom``; records the forward lattice in ``meta``."""
    grid = forward_grid(phantom, k, h)
    ops = assemble_operators(grid, receivers, k)
    W = solve_state(phantom, grid, ops, incidences)
    data = synth_scattered(W, ops, incidences)
    meta = {
        "phantom": phantom.name,
        "forward_h": grid.h,
        "forward_lower": list(grid.box.lower),
        "forward_cells": int(grid.n_elements),
    }
    return replace(data, meta=meta)


def save_data(data: ScatterData, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (incidence,receiver,re,im) and ``<path>.json``."""
    path = Path(path)
    csv_path = path.with_suffix(".csv")
    json_path = path.with_suffix(".json")
    with open(csv_path, "w") as fh:
        fh.write("incidence,receiver,re,im\n")
        for j in range(data.U.shape[0]):
            for q in range(data.U.shape[1]):
                z = data.U[j, q]
                fh.write(f"{j},{q},{z.real:.17g},{z.imag:.17g}\n")
    side = {
        "k": data.k,
        "xi": data.xi,
        "seed": data.seed,
        "receivers": {"points": data.receivers.points.tolist(),
                      "weights": data.receivers.weights.tolist()},
        "incidences": data.incidences.directions.tolist(),
        "meta": data.meta,
    }
    json_path.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_data(path: str | Path) -> ScatterData:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    receivers = ReceiverSet(side["receivers"]["points"], side["receivers"]["weights"])
    incidences = IncidenceSet(side["incidences"])
    table = np.loadtxt(path.with_suffix(".csv"), delimiter=",", skiprows=1, ndmin=2)
    U = np.zeros((len(incidences), len(receivers)), dtype=complex)
    U[table[:, 0].astype(int), table[:, 1].astype(int)] = table[:, 2] + 1j * table[:, 3]
    return ScatterData(U, receivers, incidences, side["k"], side["xi"], side["seed"],
                       side.get("meta", {}))
