"""Convex bodies W, uniform i.i.d. sampling and grid-cell occupancy counts."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import PointSet, unit_ball_volume

MIN_ACCEPTANCE = 1e-6


class SamplingError(RuntimeError):
    """Rejection sampling could not make progress (pathologically thin body)."""


@dataclass(frozen=True)
class Seed:
    """A (master seed, stream index) pair; determines a sample completely."""

    master: int
    stream: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "Seed":
        # Fold the parent stream in so that children of different parents differ.
        return Seed(self.master, self.stream * 1_000_003 + stream + 1)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    return Seed(int(seed)).rng()


class ConvexBody:
    """Compact convex set with nonempty interior.

    Subclasses provide vectorised membership, the bounding box, an interior
    reference point and (when known) closed-form volume and shadow areas.
    """

    kind = "body"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def exact_volume(self) -> float | None:
        return None

    @property
    def center(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def inradius(self) -> float:
        """Radius of a ball around ``center`` contained in the body."""
        raise NotImplementedError

    def exact_shadow(self, u: np.ndarray) -> float | None:
        return None

    def diameter_bound(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    def sample_array(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError


class Ball(ConvexBody):
    kind = "ball"

    def __init__(self, radius: float = 1.0, center=None, dim: int = 2):
        if radius <= 0:
            raise ValueError("radius must be positive")
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self._center = c

    @property
    def dim(self):
        return self._center.shape[0]

    def contains(self, points, tol=0.0):
        p = np.asarray(points, dtype=np.float64)
        d2 = ((p - self._center) ** 2).sum(-1)
        return d2 <= (self.radius + tol) ** 2

    @property
    def bbox(self):
        return self._center - self.radius, self._center + self.radius

    @property
    def exact_volume(self):
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    @property
    def center(self):
        return self._center

    @property
    def inradius(self):
        return self.radius

    def exact_shadow(self, u):
        return unit_ball_volume(self.dim - 1) * self.radius ** (self.dim - 1)

    def diameter_bound(self):
        return 2.0 * self.radius

    def sample_array(self, n, rng):
        m = self.dim
        g = rng.standard_normal((n, m))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / m)
        return self._center + g * r[:, None]

    def to_spec(self):
        return {"kind": "ball", "radius": self.radius, "center": self._center.tolist()}


class Box(ConvexBody):
    kind = "box"

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(hi <= lo):
            raise ValueError("box must have positive extent on every axis")
        self.lo, self.hi = lo, hi

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def extents(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def dim(self):
        return self.lo.shape[0]

    def contains(self, points, tol=0.0):
        p = np.asarray(points, dtype=np.float64)
        return np.all((p >= self.lo - tol) & (p <= self.hi + tol), axis=-1)

    @property
    def bbox(self):
        return self.lo, self.hi

    @property
    def exact_volume(self):
        return float(np.prod(self.extents))

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def inradius(self):
        return 0.5 * float(self.extents.min())

    def exact_shadow(self, u):
        a = self.extents
        total = np.prod(a)
        return float(np.sum(np.abs(u) * total / a))

    def sample_array(self, n, rng):
        return self.lo + rng.random((n, self.dim)) * self.extents

    def to_spec(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Ellipsoid(ConvexBody):
    """Axis-aligned ellipsoid sum(((x - c) / a)^2) <= 1."""

    kind = "ellipsoid"

    def __init__(self, semi_axes, center=None):
        a = np.asarray(semi_axes, dtype=np.float64)
        if a.ndim != 1 or np.any(a <= 0):
            raise ValueError("semi_axes must be a vector of positive numbers")
        self.semi_axes = a
        self._center = np.zeros_like(a) if center is None else np.asarray(center, dtype=np.float64)

    @property
    def dim(self):
        return self.semi_axes.shape[0]

    def contains(self, points, tol=0.0):
        p = (np.asarray(points, dtype=np.float64) - self._center) / (self.semi_axes + tol)
        return (p * p).sum(-1) <= 1.0

    @property
    def bbox(self):
        return self._center - self.semi_axes, self._center + self.semi_axes

    @property
    def exact_volume(self):
        return unit_ball_volume(self.dim) * float(np.prod(self.semi_axes))

    @property
    def center(self):
        return self._center

    @property
    def inradius(self):
        return float(self.semi_axes.min())

    def exact_shadow(self, u):
        a = self.semi_axes
        return unit_ball_volume(self.dim - 1) * float(np.prod(a)) * float(np.linalg.norm(u / a))

    def diameter_bound(self):
        return 2.0 * float(self.semi_axes.max())

    def sample_array(self, n, rng):
        return self._center + Ball(1.0, dim=self.dim).sample_array(n, rng) * self.semi_axes

    def to_spec(self):
        return {"kind": "ellipsoid", "semi_axes": self.semi_axes.tolist(), "center": self._center.tolist()}


class HPolytope(ConvexBody):
    """Bounded polytope {x : A x <= b}."""

    kind = "h-polytope"
    volume_samples = 400_000

    def __init__(self, A, b):
        A = np.asarray(A, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError("need A of shape (k, M) and b of shape (k,)")
        self.A, self.b = A, b
        if self._chebyshev[1] <= 0:
            raise ValueError("polytope has empty interior")

    @property
    def dim(self):
        return self.A.shape[1]

    def contains(self, points, tol=0.0):
        p = np.asarray(points, dtype=np.float64)
        norms = np.linalg.norm(self.A, axis=1)
        return np.all(p @ self.A.T <= self.b + tol * norms, axis=-1)

    @cached_property
    def _chebyshev(self):
        from scipy.optimize import linprog

        m = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        c = np.zeros(m + 1)
        c[-1] = -1.0
        res = linprog(
            c,
            A_ub=np.hstack([self.A, norms[:, None]]),
            b_ub=self.b,
            bounds=[(None, None)] * m + [(0, None)],
        )
        if res.status != 0:
            raise ValueError("polytope is unbounded or infeasible")
        return res.x[:m], float(res.x[m])

    @cached_property
    def bbox(self):
        from scipy.optimize import linprog

        m = self.dim
        lo, hi = np.empty(m), np.empty(m)
        for i in range(m):
            for sign, out in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(m)
                c[i] = sign
                res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * m)
                if res.status != 0:
                    raise ValueError("polytope is unbounded")
                out[i] = res.x[i]
        return lo, hi

    @property
    def center(self):
        return self._chebyshev[0]

    @property
    def inradius(self):
        return self._chebyshev[1]

    @cached_property
    def vertices(self) -> np.ndarray:
        from scipy.spatial import HalfspaceIntersection

        hs = np.hstack([self.A, -self.b[:, None]])
        return HalfspaceIntersection(hs, self.center).intersections

    def exact_shadow(self, u):
        u = np.asarray(u, dtype=np.float64)
        m = self.dim
        # orthonormal basis of u-perp: last m-1 columns of a QR with u first
        q, _ = np.linalg.qr(np.column_stack([u, np.eye(m)]))
        proj = self.vertices @ q[:, 1:m]
        if m == 2:
            return float(proj.max() - proj.min())
        from scipy.spatial import ConvexHull

        return float(ConvexHull(proj).volume)

    @cached_property
    def _volume_mc(self) -> tuple[float, float]:
        lo, hi = self.bbox
        box_vol = float(np.prod(hi - lo))
        rng = Seed(0x5EED, 7).rng()
        x = lo + rng.random((self.volume_samples, self.dim)) * (hi - lo)
        p = float(self.contains(x).mean())
        return box_vol * p, box_vol * math.sqrt(p * (1 - p) / self.volume_samples)

    def sample_array(self, n, rng):
        lo, hi = self.bbox
        out = np.empty((n, self.dim))
        filled = 0
        drawn = accepted = 0
        batch = max(64, 2 * n)
        while filled < n:
            x = lo + rng.random((batch, self.dim)) * (hi - lo)
            x = x[self.contains(x)]
            drawn += batch
            accepted += len(x)
            if drawn >= 10_000_000 and accepted / drawn < MIN_ACCEPTANCE:
                raise SamplingError(
                    f"rejection acceptance {accepted}/{drawn} below {MIN_ACCEPTANCE:g}"
                )
            take = min(len(x), n - filled)
            out[filled:filled + take] = x[:take]
            filled += take
        return out

    def to_spec(self):
        return {"kind": "h-polytope", "A": self.A.tolist(), "b": self.b.tolist()}


def parse_body(spec, dim: int | None = None) -> ConvexBody:
    """Build a body from a config value.

    Accepts a dict ``{"kind": ..., <params>}`` or one of the shorthands
    ``unit-square``, ``unit-cube``, ``unit-disc``, ``unit-ball`` (the last
    two need ``dim`` unless 2).
    """
    if isinstance(spec, ConvexBody):
        return spec
    if isinstance(spec, str):
        name = spec.strip().lower()
        if name == "unit-square":
            body = Box.unit(2)
        elif name == "unit-cube":
            body = Box.unit(dim or 3)
        elif name in ("unit-disc", "unit-disk"):
            body = Ball(1.0, dim=2)
        elif name == "unit-ball":
            body = Ball(1.0, dim=dim or 2)
        else:
            raise ValueError(f"unknown body shorthand {spec!r}")
        if dim is not None and body.dim != dim:
            raise ValueError(f"{name} has dimension {body.dim}, config says {dim}")
        return body
    spec = dict(spec)
    kind = spec.pop("kind", None)
    try:
        if kind == "ball":
            center = spec.pop("center", None)
            d = len(center) if center is not None else (dim or 2)
            body = Ball(spec.pop("radius", 1.0), center, d)
        elif kind == "box":
            body = Box(spec.pop("lo"), spec.pop("hi"))
        elif kind == "ellipsoid":
            body = Ellipsoid(spec.pop("semi_axes"), spec.pop("center", None))
        elif kind in ("h-polytope", "polytope"):
            body = HPolytope(spec.pop("A"), spec.pop("b"))
        else:
            raise ValueError(f"unknown body kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"body {kind!r} is missing parameter {exc}") from None
    if spec:
        raise ValueError(f"unknown body parameters {sorted(spec)}")
    if dim is not None and body.dim != dim:
        raise ValueError(f"body has dimension {body.dim}, config says {dim}")
    return body


def _check_dim(body: ConvexBody, p: np.ndarray):
    if p.shape[-1] != body.dim:
        raise ValueError(f"point dimension {p.shape[-1]} does not match body dimension {body.dim}")


def membership(body: ConvexBody, p) -> bool:
    p = np.asarray(p, dtype=np.float64)
    _check_dim(body, p)
    return bool(body.contains(p))


def volume(body: ConvexBody) -> tuple[float, float]:
    """Return ``(volume, stderr)``; stderr is 0 for closed-form bodies."""
    v = body.exact_volume
    if v is not None:
        return v, 0.0
    return body._volume_mc


def body_volume(body: ConvexBody) -> float:
    return volume(body)[0]


def shadow_area(body: ConvexBody, u) -> float:
    """(M-1)-volume of the orthogonal projection of the body onto u-perp."""
    u = np.asarray(u, dtype=np.float64)
    _check_dim(body, u)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return float(body.exact_shadow(u))


def sample_uniform(body: ConvexBody, n: int, seed) -> PointSet:
    if n < 0:
        raise ValueError("n must be nonnegative")
    pts = body.sample_array(n, make_rng(seed))
    return PointSet(pts, body.dim, check=False)


def grid_cell_counts(X, body: ConvexBody, mesh: float) -> np.ndarray:
    """Occupancy counts of the mesh-``mesh`` grid cubes lying wholly inside W.

    The grid is anchored at the lower bounding-box corner.  A cube counts as
    inside when all 2^M corners are members (sufficient by convexity).  Counts
    are returned in C order of the cell multi-index.
    """
    if mesh <= 0:
        raise ValueError("mesh must be positive")
    lo, hi = body.bbox
    m = body.dim
    shape = np.floor((hi - lo) / mesh + 1e-9).astype(np.int64)
    if np.any(shape <= 0):
        return np.zeros(0, dtype=np.int64)
    cells = np.indices(shape).reshape(m, -1).T
    offsets = np.array(list(itertools.product((0, 1), repeat=m)))
    inside = np.ones(len(cells), dtype=bool)
    tol = 1e-9 * mesh
    for off in offsets:
        inside &= body.contains(lo + (cells + off) * mesh, tol=tol)
    pts = np.asarray(X, dtype=np.float64).reshape(-1, m)
    counts = np.zeros(len(cells), dtype=np.int64)
    if len(pts):
        idx = np.floor((pts - lo) / mesh).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        flat = np.ravel_multi_index(idx[ok].T, shape)
        counts = np.bincount(flat, minlength=len(cells))
    return counts[inside]
