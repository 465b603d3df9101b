"""File formats for grids, reconstruction results and run manifests.

Floats are written with 17 significant digits so files round-trip exactly
and are byte-stable for fixed inputs.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import IterationOutOfRange, UnknownFormat
from .mesh import SamplingBox, SamplingGrid, connected_components

AXES = ("x", "y", "z")
FORMATS = ("csv", "vtk", "json")


def _f(v: float) -> str:
    return f"{float(v):.17g}"


def write_grid_csv(path, grid: SamplingGrid, chi) -> Path:
    """One row per element centre: ``x,y[,z],h,active,chi_re,chi_im``."""
    path = Path(path)
    chi = np.asarray(chi, dtype=complex)
    header = ",".join(AXES[: grid.dim] + ("h", "active", "chi_re", "chi_im"))
    lines = [header]
    for c, a, z in zip(grid.centers, grid.active, chi):
        cols = [_f(v) for v in c] + [_f(grid.h), str(int(a)), _f(z.real), _f(z.imag)]
        lines.append(",".join(cols))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_grid_csv(path) -> dict:
    """Columns of a grid dump as arrays: ``centers``, ``h``, ``active``, ``chi``."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    dim = header.index("h")
    return {
        "centers": table[:, :dim],
        "h": table[:, dim],
        "active": table[:, dim + 1].astype(bool),
        "chi": table[:, dim + 2] + 1j * table[:, dim + 3],
    }


def grid_from_csv(path, box: SamplingBox, level: int = 0) -> tuple[SamplingGrid, np.ndarray]:
    """Rebuild the grid and contrast values of a dump written on ``box``."""
    cols = read_grid_csv(path)
    h = float(cols["h"][0]) if len(cols["h"]) else 1.0
    index = np.rint((cols["centers"] - np.asarray(box.lower)) / h - 0.5).astype(np.int64)
    order = np.lexsort(index.T[::-1])
    grid = SamplingGrid(box, level, h, index[order], cols["active"][order])
    return grid, cols["chi"][order]


def write_grid_vtk(path, grid: SamplingGrid, chi, title: str = "wavesift grid") -> Path:
    """Legacy-VTK STRUCTURED_POINTS on the full lattice of ``grid.box``.

    Points sit at element centres; elements absent from ``grid`` get zero.
    Scalars: ``abs_chi`` (modulus of the contrast) and ``active`` (0/1).
    """
    path = Path(path)
    counts = np.rint(grid.box.sides / grid.h).astype(int)
    dims = list(counts) + [1] * (3 - grid.dim)
    origin = list(np.asarray(grid.box.lower) + grid.h / 2) + [0.0] * (3 - grid.dim)
    spacing = [grid.h] * 3
    n_points = int(np.prod(dims))
    # VTK point order runs x fastest
    flat = np.zeros(len(grid.index), dtype=np.int64)
    stride = 1
    for axis in range(grid.dim):
        flat += grid.index[:, axis] * stride
        stride *= counts[axis]
    abs_chi = np.zeros(n_points)
    abs_chi[flat] = np.abs(np.asarray(chi))
    active = np.zeros(n_points, dtype=int)
    active[flat] = grid.active.astype(int)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS " + " ".join(str(d) for d in dims),
        "ORIGIN " + " ".join(_f(v) for v in origin),
        "SPACING " + " ".join(_f(v) for v in spacing),
        f"POINT_DATA {n_points}",
        "SCALARS abs_chi double 1",
        "LOOKUP_TABLE default",
        *(_f(v) for v in abs_chi),
        "SCALARS active int 1",
        "LOOKUP_TABLE default",
        *(str(v) for v in active),
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def iteration_summary(result, i: int) -> dict:
    it = result.iterations[i]
    comps = connected_components(it.grid)
    act = it.grid.active
    return {
        "iteration": i + 1,
        "level": it.level,
        "h": it.h,
        "cutoff": it.cutoff,
        "n_elements": int(it.grid.n_elements),
        "n_active": int(act.sum()),
        "active_measure": it.grid.active_measure,
        "n_components": len(comps),
        "component_sizes": [len(c) for c in comps],
        "op_counts": dict(sorted(it.op_counts.items())),
        "active_centers": it.grid.centers[act].tolist(),
        "active_chi": [[z.real, z.imag] for z in it.chi[act]],
    }


def export_grid(result, iteration: int, fmt: str, path) -> Path:
    """Write iteration ``iteration`` (0-based) of ``result`` as csv, vtk or json."""
    if fmt not in FORMATS:
        raise UnknownFormat(f"unknown format {fmt!r}; choose from {FORMATS}")
    if not 0 <= iteration < result.n_iterations:
        raise IterationOutOfRange(
            f"iteration {iteration} outside 0..{result.n_iterations - 1}")
    it = result.iterations[iteration]
    if fmt == "csv":
        return write_grid_csv(path, it.grid, it.chi)
    if fmt == "vtk":
        return write_grid_vtk(path, it.grid, it.chi, f"iteration {iteration + 1}")
    path = Path(path)
    path.write_text(json.dumps(iteration_summary(result, iteration), indent=2) + "\n")
    return path


def manifest(result, params: dict, data=None, timings: dict | None = None) -> dict:
    """Run record; everything except ``timing`` is deterministic."""
    out = {
        "parameters": params,
        "converged": result.converged,
        "n_iterations": result.n_iterations,
        "cutoffs": result.cutoffs,
        "component_counts": result.component_counts,
        "active_counts": [int(it.grid.active.sum()) for it in result.iterations],
        "mesh_sizes": [it.h for it in result.iterations],
        "op_counts": [dict(sorted(it.op_counts.items())) for it in result.iterations],
        "box": {"lower": list(result.box.lower), "upper": list(result.box.upper)},
    }
    if data is not None:
        out["data"] = {"xi": data.xi, "seed": data.seed, "k": data.k,
                       "n_incidences": len(data.incidences), "n_receivers": len(data.receivers),
                       "meta": data.meta}
    out["timing"] = {"iteration_seconds": [it.seconds for it in result.iterations],
                     **(timings or {})}
    return out


def write_manifest(path, record: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path
