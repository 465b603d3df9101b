"""Hierarchical uniform meshes over an axis-aligned sampling box.

Elements are stored by integer lattice index relative to the box's lower
corner, so vertex deduplication, neighbourhoods and refinement are exact
integer arithmetic. Grids are immutable; selection and refinement return
new grids.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyActiveSet, NonConformingMesh

REL_TOL = 1e-9


@dataclass(frozen=True)
class SamplingBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or len(lower) not in (2, 3):
            raise ValueError("box corners must both have 2 or 3 components")
        if any(u <= l for l, u in zip(lower, upper)):
            raise ValueError(f"upper corner {upper} must exceed lower corner {lower}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @classmethod
    def cube(cls, half_side: float, dim: int) -> "SamplingBox":
        return cls((-half_side,) * dim, (half_side,) * dim)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


def _corner_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=dim)), dtype=np.int64)


def _neighbour_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 0, 1), repeat=dim)), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """A set of congruent square/cubic elements on a lattice of spacing ``h``.

    ``index`` holds one integer lattice coordinate per element (row-major,
    sorted); element ``m`` occupies ``lower + h * [index[m], index[m] + 1]``.
    ``active`` flags the subset of elements currently kept.
    """

    box: SamplingBox
    level: int
    h: float
    index: np.ndarray
    active: np.ndarray = field(default=None)

    def __post_init__(self):
        idx = np.asarray(self.index, dtype=np.int64).reshape(-1, self.box.dim)
        order = np.lexsort(idx.T[::-1])
        idx = idx[order]
        if self.active is None:
            act = np.ones(len(idx), dtype=bool)
        else:
            act = np.asarray(self.active, dtype=bool)[order]
        idx.setflags(write=False)
        act.setflags(write=False)
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "active", act)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n_elements(self) -> int:
        return len(self.index)

    @property
    def measure(self) -> float:
        """Area (2D) or volume (3D) of a single element."""
        return self.h**self.dim

    @cached_property
    def centers(self) -> np.ndarray:
        return np.asarray(self.box.lower) + (self.index + 0.5) * self.h

    @cached_property
    def _vertex_table(self):
        corners = self.index[:, None, :] + _corner_offsets(self.dim)[None, :, :]
        flat = corners.reshape(-1, self.dim)
        verts, inverse = np.unique(flat, axis=0, return_inverse=True)
        return verts, inverse.reshape(len(self.index), -1)

    @property
    def vertex_index(self) -> np.ndarray:
        """Integer lattice coordinates of the deduplicated element corners."""
        return self._vertex_table[0]

    @property
    def vertices(self) -> np.ndarray:
        return np.asarray(self.box.lower) + self.vertex_index * self.h

    @property
    def element_vertices(self) -> np.ndarray:
        """``(n_elements, 2**dim)`` array of vertex ids per element."""
        return self._vertex_table[1]

    @cached_property
    def vertex_elements(self) -> list[np.ndarray]:
        """Inverse of :attr:`element_vertices`: elements touching each vertex."""
        ev = self.element_vertices
        owners = np.repeat(np.arange(self.n_elements), ev.shape[1])
        flat = ev.ravel()
        order = np.argsort(flat, kind="stable")
        splits = np.cumsum(np.bincount(flat, minlength=len(self.vertex_index)))[:-1]
        return np.split(owners[order], splits)

    @property
    def active_elements(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    @property
    def active_vertices(self) -> np.ndarray:
        return np.unique(self.element_vertices[self.active])

    @property
    def active_measure(self) -> float:
        return self.measure * int(self.active.sum())

    def lookup(self, lattice_index) -> np.ndarray:
        """Element ids for lattice coordinates, -1 where absent."""
        q = np.atleast_2d(np.asarray(lattice_index, dtype=np.int64))
        keys = _row_keys(self.index, q)
        pos = np.searchsorted(keys[0], keys[1])
        pos = np.minimum(pos, len(self.index) - 1)
        found = keys[0][pos] == keys[1]
        return np.where(found, pos, -1)

    def locate(self, points) -> np.ndarray:
        """Element ids containing ``points`` (-1 outside the grid)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lattice = np.floor((pts - np.asarray(self.box.lower)) / self.h).astype(np.int64)
        return self.lookup(lattice)

    def with_active(self, elements) -> "SamplingGrid":
        act = np.zeros(self.n_elements, dtype=bool)
        act[np.asarray(elements, dtype=np.int64)] = True
        return SamplingGrid(self.box, self.level, self.h, self.index, act)

    def active_subgrid(self) -> "SamplingGrid":
        """Grid holding only the active elements (all flagged active)."""
        return SamplingGrid(self.box, self.level, self.h, self.index[self.active])


def _row_keys(base: np.ndarray, query: np.ndarray):
    # Lexicographic integer keys; base is already lexsorted.
    lo = min(base.min(initial=0), query.min(initial=0))
    shifted_b = base - lo
    shifted_q = query - lo
    span = int(max(shifted_b.max(initial=0), shifted_q.max(initial=0))) + 1
    weights = span ** np.arange(base.shape[1] - 1, -1, -1, dtype=np.int64)
    return shifted_b @ weights, shifted_q @ weights


def create_uniform_grid(box: SamplingBox, h: float) -> SamplingGrid:
    """Level-0 grid covering ``box`` with elements of side ``h``."""
    if h <= 0:
        raise ValueError("mesh size must be positive")
    ratio = box.sides / h
    counts = np.rint(ratio).astype(np.int64)
    if np.any(counts < 1) or np.any(np.abs(ratio - counts) > REL_TOL * ratio):
        raise NonConformingMesh(f"box sides {box.sides.tolist()} are not multiples of h={h}")
    axes = [np.arange(n) for n in counts]
    index = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
    return SamplingGrid(box, 0, float(h), index)


def select_elements(grid: SamplingGrid, flagged_vertices) -> np.ndarray:
    """Sorted ids of every element that has a flagged vertex as a corner."""
    flagged = np.unique(np.asarray(flagged_vertices, dtype=np.int64))
    if flagged.size == 0:
        return np.empty(0, dtype=np.int64)
    vertex_elements = grid.vertex_elements
    return np.unique(np.concatenate([vertex_elements[v] for v in flagged]))


def select_around(grid: SamplingGrid, flagged_elements) -> np.ndarray:
    """Elements sharing at least one vertex with a flagged element.

    This is the element's own cell plus its ``3**dim - 1`` face/edge/corner
    neighbours that exist in ``grid``.
    """
    flagged = np.asarray(flagged_elements, dtype=np.int64)
    if flagged.size == 0:
        return np.empty(0, dtype=np.int64)
    corners = grid.element_vertices[flagged].ravel()
    return select_elements(grid, corners)


def refine(grid: SamplingGrid) -> SamplingGrid:
    """Split every active element into ``2**dim`` children of half the size."""
    parents = grid.index[grid.active]
    if len(parents) == 0:
        raise EmptyActiveSet("cannot refine a grid without active elements")
    offsets = _corner_offsets(grid.dim)
    children = (2 * parents[:, None, :] + offsets[None, :, :]).reshape(-1, grid.dim)
    return SamplingGrid(grid.box, grid.level + 1, grid.h / 2.0, children)


def connected_components(grid: SamplingGrid) -> list[np.ndarray]:
    """Face-adjacent clusters of active elements, ordered by smallest id."""
    active = grid.active_elements
    if active.size == 0:
        return []
    lookup = -np.ones(grid.n_elements, dtype=np.int64)
    lookup[active] = np.arange(active.size)
    parent = np.arange(active.size)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for axis in range(grid.dim):
        step = np.zeros(grid.dim, dtype=np.int64)
        step[axis] = 1
        nb = grid.lookup(grid.index[active] + step)
        for i, n in enumerate(nb):
            if n >= 0 and lookup[n] >= 0:
                ra, rb = find(i), find(lookup[n])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    roots = np.array([find(i) for i in range(active.size)])
    groups = {}
    for i, r in enumerate(roots):
        groups.setdefault(r, []).append(active[i])
    comps = [np.array(sorted(g), dtype=np.int64) for g in groups.values()]
    comps.sort(key=lambda c: c[0])
    return comps
