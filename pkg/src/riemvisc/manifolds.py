"""Closed-form geometry kernels for the model manifolds.

Every model (Euclidean space, round sphere, hyperboloid-model hyperbolic
space, flat torus, and finite products of these) exposes the same primitive
set: metric, exponential and logarithm maps, Riemannian distance, parallel
transport of vectors and bilinear forms, the curvature operator, and the
injectivity radius.  All maps are closed-form, so downstream code can use
them as numerical oracles.

Conventions
-----------
* Sphere points live in embedding coordinates in ``R^(n+1)``; hyperbolic
  points live on the upper hyperboloid in Minkowski ``R^(n,1)`` with the
  time coordinate first; torus points are chart coordinates reduced modulo
  the periods.
* Covectors are represented by tangent vectors through the metric
  identification: one type, not two.
* Bilinear forms are stored as symmetric matrices in the canonical
  orthonormal frame of their base point.  The canonical frame is produced
  by a deterministic Gram-Schmidt run seeded from the coordinate axes, so
  all results are reproducible.
* Manifolds without conjugate points report ``INFINITE_RADIUS``
  (``math.inf``) as their injectivity radius; preconditions compare with
  strict ``<``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BasePointMismatchError,
    DegenerateSegmentError,
    GeometryDomainError,
    UnsupportedModelError,
)

INFINITE_RADIUS = math.inf

_SYMMETRY_TOL = 1e-12


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Point:
    """A manifold point; ``coords`` are embedding or chart coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _readonly(self.coords))

    def __repr__(self):
        return f"Point({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector (equivalently a covector, via the metric) at ``base``."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _readonly(self.components))

    def __repr__(self):
        return f"TangentVector({np.array2string(self.components, precision=6)})"


@dataclass(frozen=True)
class SymBilinear:
    """A symmetric bilinear form at ``base``, stored in the canonical frame."""

    base: Point
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("bilinear form matrix must be square")
        if np.max(np.abs(m - m.T), initial=0.0) > _SYMMETRY_TOL * max(
            1.0, float(np.max(np.abs(m), initial=0.0))
        ):
            raise ValueError("bilinear form matrix must be symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def operator_norm(self) -> float:
        """sup |lambda| over eigenvalues."""
        return float(np.max(np.abs(self.eigenvalues()), initial=0.0))


class Manifold:
    """Base class: shared derived operations on top of model primitives."""

    kind: str = "abstract"
    dim: int

    # ------------------------------------------------------------------ #
    # primitives each model must provide                                 #
    # ------------------------------------------------------------------ #

    @property
    def ambient_dim(self) -> int:
        raise NotImplementedError

    def ambient_inner(self, x: Point, a: np.ndarray, b: np.ndarray) -> float:
        """Inner product of coordinate vectors in the tangent space at x."""
        return float(np.dot(a, b))

    def project_tangent(self, x: Point, ambient: np.ndarray) -> np.ndarray:
        """Orthogonal projection of an ambient coordinate vector onto T_x."""
        raise NotImplementedError

    def exp(self, x: Point, v: TangentVector) -> Point:
        raise NotImplementedError

    def log(self, x: Point, y: Point) -> TangentVector:
        raise NotImplementedError

    def distance(self, x: Point, y: Point) -> float:
        raise NotImplementedError

    def parallel_transport(self, x: Point, y: Point, v: TangentVector) -> TangentVector:
        raise NotImplementedError

    def injectivity_radius(self, x: Point | None = None) -> float:
        raise NotImplementedError

    def constant_sectional(self) -> float | None:
        """The constant sectional curvature, or None for product models."""
        raise NotImplementedError

    def curvature_operator(
        self, x: Point, u: TangentVector, v: TangentVector, w: TangentVector
    ) -> TangentVector:
        """R(u, v)w with the sign fixed by <R(u,v)v, u> = K |u ^ v|^2."""
        raise NotImplementedError

    def point(self, coords) -> Point:
        """Validating constructor for points of this model."""
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator) -> Point:
        raise NotImplementedError

    def config(self) -> dict:
        """JSON-serializable description of the model."""
        raise NotImplementedError

    # ------------------------------------------------------------------ #
    # shared derived operations                                          #
    # ------------------------------------------------------------------ #

    def tangent(self, x: Point, components) -> TangentVector:
        comps = self.project_tangent(x, np.asarray(components, dtype=float))
        return TangentVector(x, comps)

    def metric(self, x: Point, v: TangentVector, w: TangentVector) -> float:
        """<v, w>_x; raises if the arguments are based at different points."""
        self._check_based(x, v)
        self._check_based(x, w)
        return self.ambient_inner(x, v.components, w.components)

    def norm(self, x: Point, v: TangentVector) -> float:
        return math.sqrt(max(self.metric(x, v, v), 0.0))

    def same_point(self, x: Point, y: Point, tol: float = 1e-9) -> bool:
        return self.distance(x, y) <= tol

    def _check_based(self, x: Point, v: TangentVector):
        if v.base is x:
            return
        if not self.same_point(v.base, x):
            raise BasePointMismatchError(
                f"tangent object based at {v.base} used at {x}"
            )

    def sectional_curvature(self, x: Point, u: TangentVector, v: TangentVector) -> float:
        """K(u, v) = <R(u,v)v, u> / (|u|^2 |v|^2 - <u,v>^2)."""
        uu = self.metric(x, u, u)
        vv = self.metric(x, v, v)
        uv = self.metric(x, u, v)
        denom = uu * vv - uv * uv
        if denom <= 1e-12 * max(uu * vv, 1e-300):
            raise GeometryDomainError("sectional curvature needs independent vectors")
        r = self.curvature_operator(x, u, v, v)
        return self.metric(x, r, u) / denom

    def canonical_frame(self, x: Point) -> np.ndarray:
        """Deterministic orthonormal frame at x, rows = frame vectors.

        Gram-Schmidt over the coordinate axes projected to the tangent
        space; axes whose projection is near-degenerate are skipped.
        """
        rows = []
        for k in range(self.ambient_dim):
            e = np.zeros(self.ambient_dim)
            e[k] = 1.0
            u = self.project_tangent(x, e)
            for r in rows:
                u = u - self.ambient_inner(x, u, r) * r
            nrm = self.ambient_inner(x, u, u)
            if nrm > 1e-16:
                nrm = math.sqrt(nrm)
            if nrm > 1e-8:
                rows.append(u / nrm)
            if len(rows) == self.dim:
                break
        if len(rows) != self.dim:
            raise GeometryDomainError("frame construction failed")
        return np.array(rows)

    def frame_components(self, x: Point, v: TangentVector, frame: np.ndarray | None = None) -> np.ndarray:
        """Components of v in the (canonical, unless given) frame at x."""
        self._check_based(x, v)
        if frame is None:
            frame = self.canonical_frame(x)
        return np.array([self.ambient_inner(x, v.components, f) for f in frame])

    def tangent_from_frame(self, x: Point, comps, frame: np.ndarray | None = None) -> TangentVector:
        if frame is None:
            frame = self.canonical_frame(x)
        comps = np.asarray(comps, dtype=float)
        return TangentVector(x, comps @ frame)

    def bilinear(self, x: Point, matrix) -> SymBilinear:
        return SymBilinear(x, matrix)

    def parallel_transport_bilinear(self, x: Point, y: Point, a: SymBilinear) -> SymBilinear:
        """Transport of a form: (L_xy A)(u, u) := A(L_yx u, L_yx u)."""
        self._check_based(x, a)
        frame_y = self.canonical_frame(y)
        back = np.array(
            [
                self.frame_components(
                    x, self.parallel_transport(y, x, TangentVector(y, f))
                )
                for f in frame_y
            ]
        )
        return SymBilinear(y, back @ a.matrix @ back.T)

    def random_tangent(
        self, rng: np.random.Generator, x: Point, scale: float = 1.0
    ) -> TangentVector:
        raw = rng.standard_normal(self.ambient_dim) * scale
        return TangentVector(x, self.project_tangent(x, raw))

    def geodesic_segment(self, x: Point, y: Point) -> "GeodesicSegment":
        return GeodesicSegment.connect(self, x, y)


class Euclidean(Manifold):
    kind = "euclidean"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)

    @property
    def ambient_dim(self) -> int:
        return self.dim

    def project_tangent(self, x, ambient):
        return np.asarray(ambient, dtype=float)

    def point(self, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates")
        return Point(coords)

    def exp(self, x, v):
        self._check_based(x, v)
        return Point(x.coords + v.components)

    def log(self, x, y):
        return TangentVector(x, y.coords - x.coords)

    def distance(self, x, y):
        return float(np.linalg.norm(y.coords - x.coords))

    def parallel_transport(self, x, y, v):
        self._check_based(x, v)
        return TangentVector(y, v.components)

    def injectivity_radius(self, x=None):
        return INFINITE_RADIUS

    def constant_sectional(self):
        return 0.0

    def curvature_operator(self, x, u, v, w):
        return TangentVector(x, np.zeros(self.dim))

    def random_point(self, rng):
        return Point(rng.standard_normal(self.dim))

    def config(self):
        return {"model": "euclidean", "dim": self.dim}


class Sphere(Manifold):
    """Round sphere of the given radius, embedded in R^(n+1)."""

    kind = "sphere"

    def __init__(self, dim: int, radius: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.dim = int(dim)
        self.radius = float(radius)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def project_tangent(self, x, ambient):
        a = np.asarray(ambient, dtype=float)
        return a - (np.dot(a, x.coords) / self.radius**2) * x.coords

    def point(self, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim + 1,):
            raise ValueError(f"expected {self.dim + 1} embedding coordinates")
        nrm = np.linalg.norm(coords)
        if abs(nrm - self.radius) > 1e-9 * self.radius:
            raise ValueError("point does not lie on the sphere")
        return Point(coords * (self.radius / nrm))

    def exp(self, x, v):
        self._check_based(x, v)
        s = np.linalg.norm(v.components)
        if s == 0.0:
            return x
        theta = s / self.radius
        p = math.cos(theta) * x.coords + math.sin(theta) * self.radius * v.components / s
        return Point(p * (self.radius / np.linalg.norm(p)))

    def _angle(self, x, y):
        c = np.dot(x.coords, y.coords) / self.radius**2
        u = y.coords - c * x.coords
        s = np.linalg.norm(u) / self.radius
        return math.atan2(s, c), u

    def distance(self, x, y):
        theta, _ = self._angle(x, y)
        return self.radius * theta

    def log(self, x, y):
        theta, u = self._angle(x, y)
        nu = np.linalg.norm(u)
        if theta >= math.pi * (1.0 - 1e-12) or (nu <= 1e-12 * self.radius and theta > 1.0):
            raise GeometryDomainError("log undefined at or beyond the antipode")
        if nu <= 1e-300:
            return TangentVector(x, np.zeros(self.dim + 1))
        return TangentVector(x, (self.radius * theta / nu) * u)

    def parallel_transport(self, x, y, v):
        self._check_based(x, v)
        e = self.log(x, y)
        ell = np.linalg.norm(e.components)
        if ell <= 1e-300:
            return TangentVector(y, v.components)
        u = e.components / ell
        theta = ell / self.radius
        a = np.dot(v.components, u)
        vel_y = -math.sin(theta) * x.coords / self.radius + math.cos(theta) * u
        return TangentVector(y, v.components - a * u + a * vel_y)

    def injectivity_radius(self, x=None):
        return math.pi * self.radius

    def constant_sectional(self):
        return 1.0 / self.radius**2

    def curvature_operator(self, x, u, v, w):
        k = self.constant_sectional()
        uw = self.metric(x, u, w)
        vw = self.metric(x, v, w)
        return TangentVector(x, k * (vw * u.components - uw * v.components))

    def random_point(self, rng):
        p = rng.standard_normal(self.dim + 1)
        return Point(p * (self.radius / np.linalg.norm(p)))

    def config(self):
        return {"model": "sphere", "dim": self.dim, "radius": self.radius}


class Hyperbolic(Manifold):
    """Hyperbolic space of curvature -K0, realized on the upper hyperboloid.

    Points p satisfy <p, p>_L = -1/K0 with the Minkowski form
    <a, b>_L = -a_0 b_0 + sum_i a_i b_i (time coordinate first).
    """

    kind = "hyperbolic"

    def __init__(self, dim: int, curvature: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if curvature <= 0:
            raise ValueError("curvature parameter K0 must be positive")
        self.dim = int(dim)
        self.k0 = float(curvature)
        self.scale = 1.0 / math.sqrt(self.k0)

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def _minkowski(self, a, b):
        return float(np.dot(a[1:], b[1:]) - a[0] * b[0])

    def ambient_inner(self, x, a, b):
        return self._minkowski(a, b)

    def project_tangent(self, x, ambient):
        a = np.asarray(ambient, dtype=float)
        return a + self.k0 * self._minkowski(a, x.coords) * x.coords

    def point(self, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim + 1,):
            raise ValueError(f"expected {self.dim + 1} Minkowski coordinates")
        q = self._minkowski(coords, coords)
        if abs(q + 1.0 / self.k0) > 1e-8 / self.k0 or coords[0] <= 0:
            raise ValueError("point does not lie on the upper hyperboloid")
        return Point(coords / math.sqrt(-q * self.k0))

    def base_point(self) -> Point:
        p = np.zeros(self.dim + 1)
        p[0] = self.scale
        return Point(p)

    def exp(self, x, v):
        self._check_based(x, v)
        s2 = self._minkowski(v.components, v.components)
        if s2 <= 0.0:
            return x
        s = math.sqrt(s2)
        theta = s / self.scale
        p = math.cosh(theta) * x.coords + math.sinh(theta) * self.scale * v.components / s
        q = self._minkowski(p, p)
        return Point(p / math.sqrt(-q * self.k0))

    def _split(self, x, y):
        u = self.project_tangent(x, y.coords)
        nu2 = self._minkowski(u, u)
        nu = math.sqrt(max(nu2, 0.0))
        theta = math.asinh(nu / self.scale)
        return theta, u, nu

    def distance(self, x, y):
        theta, _, _ = self._split(x, y)
        return self.scale * theta

    def log(self, x, y):
        theta, u, nu = self._split(x, y)
        if nu <= 1e-300:
            return TangentVector(x, np.zeros(self.dim + 1))
        return TangentVector(x, (self.scale * theta / nu) * u)

    def parallel_transport(self, x, y, v):
        self._check_based(x, v)
        e = self.log(x, y)
        ell = math.sqrt(max(self._minkowski(e.components, e.components), 0.0))
        if ell <= 1e-300:
            return TangentVector(y, v.components)
        u = e.components / ell
        theta = ell / self.scale
        a = self._minkowski(v.components, u)
        vel_y = math.sinh(theta) * x.coords / self.scale + math.cosh(theta) * u
        return TangentVector(y, v.components - a * u + a * vel_y)

    def injectivity_radius(self, x=None):
        return INFINITE_RADIUS

    def constant_sectional(self):
        return -self.k0

    def curvature_operator(self, x, u, v, w):
        k = self.constant_sectional()
        uw = self.metric(x, u, w)
        vw = self.metric(x, v, w)
        return TangentVector(x, k * (vw * u.components - uw * v.components))

    def random_point(self, rng, spread: float = 0.8):
        # Moderate spread keeps hyperboloid coordinates well conditioned:
        # they grow like cosh(distance) and Minkowski products cancel.
        o = self.base_point()
        return self.exp(o, self.random_tangent(rng, o, scale=spread))

    def config(self):
        return {"model": "hyperbolic", "dim": self.dim, "curvature": self.k0}


class FlatTorus(Manifold):
    """Flat torus with the given periods; chart coordinates mod periods."""

    kind = "flat_torus"

    def __init__(self, periods: Sequence[float]):
        periods = np.asarray(periods, dtype=float)
        if periods.ndim != 1 or periods.size < 1:
            raise ValueError("periods must be a nonempty vector")
        if np.any(periods <= 0):
            raise ValueError("periods must be positive")
        self.periods = _readonly(periods)
        self.dim = int(periods.size)

    @property
    def ambient_dim(self) -> int:
        return self.dim

    def project_tangent(self, x, ambient):
        return np.asarray(ambient, dtype=float)

    def wrap(self, coords) -> np.ndarray:
        return np.mod(np.asarray(coords, dtype=float), self.periods)

    def point(self, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} chart coordinates")
        return Point(self.wrap(coords))

    def exp(self, x, v):
        self._check_based(x, v)
        return Point(self.wrap(x.coords + v.components))

    def _minimal_diff(self, x, y):
        d = y.coords - x.coords
        return (d + self.periods / 2.0) % self.periods - self.periods / 2.0

    def distance(self, x, y):
        return float(np.linalg.norm(self._minimal_diff(x, y)))

    def log(self, x, y):
        d = self._minimal_diff(x, y)
        if np.any(self.periods / 2.0 - np.abs(d) < 1e-12 * self.periods):
            raise GeometryDomainError("log undefined at the torus cut locus")
        return TangentVector(x, d)

    def parallel_transport(self, x, y, v):
        self._check_based(x, v)
        return TangentVector(y, v.components)

    def injectivity_radius(self, x=None):
        return float(np.min(self.periods)) / 2.0

    def constant_sectional(self):
        return 0.0

    def curvature_operator(self, x, u, v, w):
        return TangentVector(x, np.zeros(self.dim))

    def random_point(self, rng):
        return Point(rng.uniform(0.0, self.periods))

    def config(self):
        return {"model": "flat_torus", "periods": list(self.periods)}


class Product(Manifold):
    """Finite product manifold; all operations act factor by factor."""

    kind = "product"

    def __init__(self, factors: Sequence[Manifold]):
        if not factors:
            raise ValueError("product needs at least one factor")
        self.factors = list(factors)
        self.dim = sum(f.dim for f in self.factors)
        sizes = [f.ambient_dim for f in self.factors]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self._slices = [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]
        self._ambient = int(offsets[-1])

    @property
    def ambient_dim(self) -> int:
        return self._ambient

    def _parts_point(self, x: Point) -> list[Point]:
        return [Point(x.coords[s]) for s in self._slices]

    def _join(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def ambient_inner(self, x, a, b):
        xs = self._parts_point(x)
        return sum(
            f.ambient_inner(xi, a[s], b[s])
            for f, xi, s in zip(self.factors, xs, self._slices)
        )

    def project_tangent(self, x, ambient):
        xs = self._parts_point(x)
        ambient = np.asarray(ambient, dtype=float)
        return self._join(
            [
                f.project_tangent(xi, ambient[s])
                for f, xi, s in zip(self.factors, xs, self._slices)
            ]
        )

    def point(self, coords) -> Point:
        coords = np.asarray(coords, dtype=float)
        parts = [
            f.point(coords[s]).coords for f, s in zip(self.factors, self._slices)
        ]
        return Point(self._join(parts))

    def exp(self, x, v):
        self._check_based(x, v)
        xs = self._parts_point(x)
        out = [
            f.exp(xi, TangentVector(xi, v.components[s])).coords
            for f, xi, s in zip(self.factors, xs, self._slices)
        ]
        return Point(self._join(out))

    def log(self, x, y):
        xs, ys = self._parts_point(x), self._parts_point(y)
        out = [
            f.log(xi, yi).components
            for f, xi, yi in zip(self.factors, xs, ys)
        ]
        return TangentVector(x, self._join(out))

    def distance(self, x, y):
        xs, ys = self._parts_point(x), self._parts_point(y)
        return math.sqrt(
            sum(f.distance(xi, yi) ** 2 for f, xi, yi in zip(self.factors, xs, ys))
        )

    def parallel_transport(self, x, y, v):
        self._check_based(x, v)
        xs, ys = self._parts_point(x), self._parts_point(y)
        out = [
            f.parallel_transport(xi, yi, TangentVector(xi, v.components[s])).components
            for f, xi, yi, s in zip(self.factors, xs, ys, self._slices)
        ]
        return TangentVector(y, self._join(out))

    def injectivity_radius(self, x=None):
        xs = self._parts_point(x) if x is not None else [None] * len(self.factors)
        return min(f.injectivity_radius(xi) for f, xi in zip(self.factors, xs))

    def constant_sectional(self):
        return None

    def curvature_operator(self, x, u, v, w):
        xs = self._parts_point(x)
        out = [
            f.curvature_operator(
                xi,
                TangentVector(xi, u.components[s]),
                TangentVector(xi, v.components[s]),
                TangentVector(xi, w.components[s]),
            ).components
            for f, xi, s in zip(self.factors, xs, self._slices)
        ]
        return TangentVector(x, self._join(out))

    def random_point(self, rng):
        return Point(self._join([f.random_point(rng).coords for f in self.factors]))

    def config(self):
        return {"model": "product", "factors": [f.config() for f in self.factors]}


@dataclass(frozen=True)
class GeodesicSegment:
    """Unit-speed minimizing geodesic with a parallel orthonormal frame.

    ``frame0`` rows are orthonormal tangent vectors at the start point with
    the first row equal to the initial velocity; ``frame_end`` is the same
    frame parallel-transported to the endpoint.
    """

    model: Manifold
    start: Point
    end: Point
    length: float
    frame0: np.ndarray
    frame_end: np.ndarray = field(repr=False)

    @classmethod
    def connect(cls, model: Manifold, x: Point, y: Point) -> "GeodesicSegment":
        ell = model.distance(x, y)
        if ell <= 0.0:
            raise DegenerateSegmentError("geodesic segment needs distinct endpoints")
        if ell >= min(model.injectivity_radius(x), model.injectivity_radius(y)):
            raise GeometryDomainError("endpoints beyond the injectivity radius")
        direction = model.log(x, y)
        e1 = direction.components / ell
        rows = [e1]
        for f in model.canonical_frame(x):
            u = np.array(f)
            for r in rows:
                u = u - model.ambient_inner(x, u, r) * r
            nrm2 = model.ambient_inner(x, u, u)
            if nrm2 > 1e-16:
                rows.append(u / math.sqrt(nrm2))
            if len(rows) == model.dim:
                break
        if len(rows) != model.dim:
            raise GeometryDomainError("could not complete segment frame")
        frame0 = np.array(rows)
        frame_end = np.array(
            [
                model.parallel_transport(x, y, TangentVector(x, f)).components
                for f in frame0
            ]
        )
        return cls(model, x, y, float(ell), _readonly(frame0), _readonly(frame_end))

    def point_at(self, t: float) -> Point:
        if t == 0.0:
            return self.start
        return self.model.exp(self.start, TangentVector(self.start, t * self.frame0[0]))

    def velocity_at(self, t: float) -> TangentVector:
        p = self.point_at(t)
        return self.model.parallel_transport(
            self.start, p, TangentVector(self.start, self.frame0[0])
        )

    def frame_at(self, t: float) -> np.ndarray:
        if t == 0.0:
            return self.frame0
        if t == self.length:
            return self.frame_end
        p = self.point_at(t)
        return np.array(
            [
                self.model.parallel_transport(
                    self.start, p, TangentVector(self.start, f)
                ).components
                for f in self.frame0
            ]
        )

    def components_at_start(self, v: TangentVector) -> np.ndarray:
        self.model._check_based(self.start, v)
        return np.array(
            [self.model.ambient_inner(self.start, v.components, f) for f in self.frame0]
        )

    def components_at_end(self, w: TangentVector) -> np.ndarray:
        self.model._check_based(self.end, w)
        return np.array(
            [self.model.ambient_inner(self.end, w.components, f) for f in self.frame_end]
        )

    def vector_at_start(self, comps) -> TangentVector:
        return TangentVector(self.start, np.asarray(comps, dtype=float) @ self.frame0)

    def vector_at_end(self, comps) -> TangentVector:
        return TangentVector(self.end, np.asarray(comps, dtype=float) @ self.frame_end)


# ---------------------------------------------------------------------- #
# JSON model descriptions                                                #
# ---------------------------------------------------------------------- #

def from_config(cfg: dict) -> Manifold:
    """Build a manifold from its JSON description.

    Examples: ``{"model": "sphere", "dim": 2, "radius": 1.0}``,
    ``{"model": "hyperbolic", "dim": 2, "curvature": 1.0}``,
    ``{"model": "flat_torus", "periods": [1.0, 1.0]}``,
    ``{"model": "product", "factors": [...]}``.
    """
    if not isinstance(cfg, dict) or "model" not in cfg:
        raise UnsupportedModelError("model description must be a dict with 'model'")
    kind = cfg["model"]
    if kind == "euclidean":
        return Euclidean(int(cfg["dim"]))
    if kind == "sphere":
        return Sphere(int(cfg["dim"]), float(cfg.get("radius", 1.0)))
    if kind == "hyperbolic":
        return Hyperbolic(int(cfg["dim"]), float(cfg.get("curvature", 1.0)))
    if kind == "flat_torus":
        return FlatTorus(cfg["periods"])
    if kind == "product":
        return Product([from_config(sub) for sub in cfg["factors"]])
    raise UnsupportedModelError(f"unknown model kind {kind!r}")
