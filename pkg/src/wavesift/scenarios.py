"""Ground-truth phantoms and acquisition geometries.

Lengths in the built-in phantoms are multiples of the wavelength, so every
constructor takes ``wavelength``. Phantoms are unions of simple shapes, each
carrying either a constant contrast or a named profile; where shapes overlap
the first one listed wins.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, UnknownPhantom
from .mesh import SamplingBox
from .physics import IncidenceSet, ReceiverSet

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class Shape:
    dim: int

    def contains(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


@dataclass(frozen=True)
class Box(Shape):
    lower: tuple
    upper: tuple

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, points):
        return np.all((points >= self.lower) & (points <= self.upper), axis=-1)

    def bounds(self):
        return np.asarray(self.lower, float), np.asarray(self.upper, float)


@dataclass(frozen=True)
class Ball(Shape):
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    def contains(self, points):
        return np.linalg.norm(points - np.asarray(self.center), axis=-1) <= self.radius

    def bounds(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Annulus(Shape):
    """Ring (2D) or spherical shell (3D) between two radii."""

    center: tuple
    inner: float
    outer: float

    @property
    def dim(self):
        return len(self.center)

    def contains(self, points):
        r = np.linalg.norm(points - np.asarray(self.center), axis=-1)
        return (r >= self.inner) & (r <= self.outer)

    def bounds(self):
        c = np.asarray(self.center, float)
        return c - self.outer, c + self.outer


@dataclass(frozen=True)
class Torus(Shape):
    """Solid torus around the z axis through ``center``."""

    center: tuple
    major: float
    minor: float

    dim = 3

    def contains(self, points):
        p = points - np.asarray(self.center)
        rho = np.hypot(p[..., 0], p[..., 1])
        return (self.major - rho) ** 2 + p[..., 2] ** 2 <= self.minor**2

    def bounds(self):
        c = np.asarray(self.center, float)
        ext = np.array([self.major + self.minor] * 2 + [self.minor])
        return c - ext, c + ext


def sine_profile(points: np.ndarray, wavelength: float) -> np.ndarray:
    """Product of ``sin(pi (10|x|/lambda - 1.5) / 3)`` over the first two axes."""
    u = np.abs(points[..., :2]) / wavelength
    return np.prod(np.sin(np.pi * (10.0 * u - 1.5) / 3.0), axis=-1)


PROFILES: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {"sine": sine_profile}


@dataclass(frozen=True, eq=False)
class Phantom:
    name: str
    dim: int
    parts: tuple  # of (Shape, complex | profile name)
    wavelength: float = 1.0

    def support(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        inside = np.zeros(pts.shape[:-1], dtype=bool)
        for shape, _ in self.parts:
            inside |= shape.contains(pts)
        return inside

    def contrast(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        chi = np.zeros(pts.shape[:-1], dtype=complex)
        claimed = np.zeros(pts.shape[:-1], dtype=bool)
        for shape, value in self.parts:
            hit = shape.contains(pts) & ~claimed
            if not np.any(hit):
                continue
            if isinstance(value, str):
                chi[hit] = PROFILES[value](pts[hit], self.wavelength)
            else:
                chi[hit] = value
            claimed |= hit
        return chi

    @property
    def bbox(self) -> SamplingBox:
        lows, highs = zip(*(shape.bounds() for shape, _ in self.parts))
        return SamplingBox(tuple(np.min(lows, axis=0)), tuple(np.max(highs, axis=0)))

    def part_centers(self) -> list[np.ndarray]:
        """Geometric centres of the constituent shapes."""
        out = []
        for shape, _ in self.parts:
            lo, hi = shape.bounds()
            out.append((lo + hi) / 2.0)
        return out


def _square(center, side, dim):
    c = np.asarray(center, float)
    return Box(tuple(c - side / 2), tuple(c + side / 2))


def make_phantom(name: str, wavelength: float = 1.0) -> Phantom:
    lam = wavelength
    if name == "twin_squares":
        parts = ((_square((-0.3 * lam,) * 2, 0.3 * lam, 2), 1.0),
                 (_square((0.3 * lam,) * 2, 0.3 * lam, 2), 2.0))
        return Phantom(name, 2, parts, lam)
    if name == "twin_squares_sine":
        parts = ((_square((-0.3 * lam,) * 2, 0.3 * lam, 2), "sine"),
                 (_square((0.3 * lam,) * 2, 0.3 * lam, 2), "sine"))
        return Phantom(name, 2, parts, lam)
    if name == "annulus":
        return Phantom(name, 2, ((Annulus((0.0, 0.0), 0.3 * lam, 0.5 * lam), 2.0),), lam)
    if name == "twin_cubes":
        parts = ((Box((-0.45 * lam,) * 3, (-0.15 * lam,) * 3), 2.0),
                 (Box((0.15 * lam,) * 3, (0.45 * lam,) * 3), 2.0))
        return Phantom(name, 3, parts, lam)
    if name == "torus":
        return Phantom(name, 3, ((Torus((0.0, 0.0, 0.0), 0.4 * lam, 0.1 * lam), 2.0),), lam)
    raise UnknownPhantom(name)


PHANTOM_NAMES = ("twin_squares", "twin_squares_sine", "annulus", "twin_cubes", "torus")

# (half side of the sampling box, initial mesh size), both in wavelengths
SAMPLING_SETUPS = {
    "twin_squares": (1.2, 0.4),
    "twin_squares_sine": (1.2, 0.4),
    "annulus": (2.8, 0.4),
    "twin_cubes": (1.2, 0.8),
    "torus": (1.2, 0.4),
}


def _parse_value(raw):
    if isinstance(raw, str):
        if raw not in PROFILES:
            raise ConfigError(f"unknown contrast profile {raw!r}")
        return raw
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return complex(raw[0], raw[1])
    return complex(raw)


def _parse_shape(spec: dict) -> Shape:
    kind = spec.get("type")
    try:
        if kind == "box":
            return Box(tuple(spec["lower"]), tuple(spec["upper"]))
        if kind in ("sphere", "ball", "disk"):
            return Ball(tuple(spec["center"]), float(spec["radius"]))
        if kind == "annulus":
            return Annulus(tuple(spec["center"]), float(spec["inner"]), float(spec["outer"]))
        if kind == "torus":
            return Torus(tuple(spec["center"]), float(spec["major"]), float(spec["minor"]))
    except KeyError as exc:
        raise ConfigError(f"shape {kind!r} is missing field {exc}") from None
    raise ConfigError(f"unknown shape type {kind!r}")


def phantom_from_dict(spec: dict, wavelength: float = 1.0) -> Phantom:
    """Build a phantom from ``{"name", "shapes": [{"type", ..., "contrast"}]}``."""
    shapes = spec.get("shapes")
    if not shapes:
        raise ConfigError("phantom geometry needs a non-empty 'shapes' list")
    parts = tuple((_parse_shape(s), _parse_value(s.get("contrast", 1.0))) for s in shapes)
    dims = {p[0].dim for p in parts}
    if len(dims) != 1:
        raise ConfigError(f"mixed shape dimensions {sorted(dims)}")
    return Phantom(spec.get("name", "custom"), dims.pop(), parts, wavelength)


def load_phantom(path: str | Path, wavelength: float = 1.0) -> Phantom:
    with open(path) as fh:
        return phantom_from_dict(json.load(fh), wavelength)


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = GOLDEN_ANGLE * np.arange(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _surface_points(n: int, dim: int) -> np.ndarray:
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        return fibonacci_sphere(n)
    raise ValueError(f"dimension must be 2 or 3, got {dim}")


def incidence_directions(n_inc: int, dim: int) -> IncidenceSet:
    """Plane-wave directions pointing from equally spread sources to the origin."""
    if n_inc < 1:
        raise ValueError("need at least one incidence")
    return IncidenceSet(-_surface_points(n_inc, dim))


def receiver_positions(n_rec: int, radius: float, dim: int) -> ReceiverSet:
    if n_rec < 1 or radius <= 0:
        raise ValueError("need n_rec >= 1 and a positive radius")
    pts = radius * _surface_points(n_rec, dim)
    measure = 2.0 * np.pi * radius if dim == 2 else 4.0 * np.pi * radius**2
    return ReceiverSet(pts, np.full(n_rec, measure / n_rec))


def true_element_mask(phantom: Phantom, centers: Sequence, h: float, samples: int = 5) -> np.ndarray:
    """Elements (given by centre and side) that intersect the phantom support.

    Tested on a ``samples**dim`` sub-lattice per element including its faces.
    """
    centers = np.atleast_2d(np.asarray(centers, float))
    dim = centers.shape[1]
    ticks = np.linspace(-0.5, 0.5, samples) * h
    offsets = np.stack(np.meshgrid(*[ticks] * dim, indexing="ij"), -1).reshape(-1, dim)
    hits = phantom.support(centers[:, None, :] + offsets[None, :, :])
    return hits.any(axis=1)
