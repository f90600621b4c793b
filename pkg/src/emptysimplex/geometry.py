"""Low-level geometric predicates and measures in R^M.

All predicates are floating point with a single degeneracy tolerance
``EPS_GEOM`` applied to *normalized* determinants, i.e. the determinant of
the edge matrix divided by the product of the edge lengths (the Hadamard
bound).  A normalized determinant is a scale-free number in [-1, 1], so the
same tolerance works for unit-square data and for tiny clustered simplices.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ._backend import USE_NUMBA, njit

EPS_GEOM = 1e-12


class DegenerateSimplexError(ValueError):
    """Raised when an operation needs a full-dimensional simplex."""


class PointSet:
    """An ordered set of ``n`` distinct points in R^M, ``M >= 2``.

    The coordinates are stored as a read-only ``(n, M)`` float64 array.
    """

    __slots__ = ("_points",)

    def __init__(self, points, dim: int | None = None, *, check: bool = True):
        arr = np.array(points, dtype=np.float64)
        if arr.ndim == 1 and arr.size == 0:
            if dim is None:
                raise ValueError("an empty PointSet needs an explicit dim")
            arr = arr.reshape(0, dim)
        if arr.ndim != 2:
            raise ValueError(f"points must be an (n, M) array, got shape {arr.shape}")
        if dim is not None and arr.shape[1] != dim:
            raise ValueError(f"points have dimension {arr.shape[1]}, expected {dim}")
        if arr.shape[1] < 2:
            raise ValueError("dimension M must be at least 2")
        if check:
            if not np.all(np.isfinite(arr)):
                raise ValueError("coordinates must be finite")
            if len(np.unique(arr, axis=0)) != len(arr):
                raise ValueError("points must be pairwise distinct")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __getitem__(self, i):
        return self._points[i]

    def __array__(self, dtype=None, copy=None):
        return self._points if dtype is None else self._points.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash(self._points.tobytes())

    def __repr__(self):
        return f"PointSet(n={len(self)}, dim={self.dim})"

    def union(self, other: "PointSet") -> "PointSet":
        return PointSet(np.vstack([self._points, np.asarray(other)]), self.dim)

    def diameter(self) -> float:
        n = len(self)
        if n < 2:
            return 0.0
        best = 0.0
        pts = self._points
        for start in range(0, n, 512):
            block = pts[start:start + 512]
            d = np.sqrt(((block[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
            best = max(best, float(d.max()))
        return best


def as_pointset(X) -> PointSet:
    return X if isinstance(X, PointSet) else PointSet(X)


def _as_vertices(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
        raise ValueError(
            f"a simplex in R^M needs M+1 vertices of dimension M, got shape {v.shape}"
        )
    return v


def normalized_det(edges: np.ndarray) -> float:
    """det(edges) / prod(|edge_i|); 0.0 if any edge has zero length."""
    lengths = np.sqrt((edges * edges).sum(axis=1))
    scale = float(np.prod(lengths))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.det(edges)) / scale


def orientation(vertices) -> int:
    """Sign of det(v_1 - v_0, ..., v_M - v_0), with 0 for near-degenerate input."""
    v = _as_vertices(vertices)
    d = normalized_det(v[1:] - v[0])
    if abs(d) <= EPS_GEOM:
        return 0
    return 1 if d > 0 else -1


def simplex_volume(vertices) -> float:
    v = _as_vertices(vertices)
    m = v.shape[1]
    return abs(float(np.linalg.det(v[1:] - v[0]))) / math.factorial(m)


def contains_strictly(simplex, p) -> bool:
    """True iff ``p`` lies in the closed simplex and is not one of its vertices.

    Boundary points count as contained: a point on a facet violates emptiness.
    Raises DegenerateSimplexError for a flat simplex.
    """
    v = _as_vertices(simplex)
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (v.shape[1],):
        raise ValueError(f"point has shape {p.shape}, expected ({v.shape[1]},)")
    s = orientation(v)
    if s == 0:
        raise DegenerateSimplexError("simplex is degenerate")
    if np.any(np.all(v == p, axis=1)):
        return False
    for i in range(v.shape[0]):
        w = v.copy()
        w[i] = p
        si = orientation(w)
        if si == -s:
            return False
    return True


def general_position(X) -> bool:
    """True iff no M+1 points of X lie on a common affine hyperplane."""
    pts = np.asarray(as_pointset(X).points)
    n, m = pts.shape
    if n <= m:
        return True
    if USE_NUMBA and m <= 3:
        return bool(_general_position_kernel(pts))
    return _general_position_numpy(pts)


def _general_position_numpy(pts: np.ndarray) -> bool:
    n, m = pts.shape
    combos = combinations(range(n), m + 1)
    while True:
        chunk = np.fromiter(
            (i for c in _take(combos, 20000) for i in c), dtype=np.int64
        )
        if chunk.size == 0:
            return True
        idx = chunk.reshape(-1, m + 1)
        edges = pts[idx[:, 1:]] - pts[idx[:, :1]]
        scale = np.prod(np.sqrt((edges * edges).sum(-1)), axis=1)
        dets = np.linalg.det(edges)
        if np.any(np.abs(dets) <= EPS_GEOM * scale):
            return False


def _take(it, k):
    for _ in range(k):
        try:
            yield next(it)
        except StopIteration:
            return


@njit
def _orient_norm2(ax, ay, bx, by, cx, cy):
    ux = bx - ax
    uy = by - ay
    vx = cx - ax
    vy = cy - ay
    d = ux * vy - uy * vx
    scale = math.sqrt((ux * ux + uy * uy) * (vx * vx + vy * vy))
    if scale == 0.0:
        return 0.0
    return d / scale


@njit
def _orient_norm3(p, a, b, c, d):
    ux = p[b, 0] - p[a, 0]
    uy = p[b, 1] - p[a, 1]
    uz = p[b, 2] - p[a, 2]
    vx = p[c, 0] - p[a, 0]
    vy = p[c, 1] - p[a, 1]
    vz = p[c, 2] - p[a, 2]
    wx = p[d, 0] - p[a, 0]
    wy = p[d, 1] - p[a, 1]
    wz = p[d, 2] - p[a, 2]
    det = ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) + uz * (vx * wy - vy * wx)
    scale = math.sqrt(
        (ux * ux + uy * uy + uz * uz) * (vx * vx + vy * vy + vz * vz) * (wx * wx + wy * wy + wz * wz)
    )
    if scale == 0.0:
        return 0.0
    return det / scale


@njit
def _general_position_kernel(p):
    n, m = p.shape
    if m == 2:
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    o = _orient_norm2(p[i, 0], p[i, 1], p[j, 0], p[j, 1], p[k, 0], p[k, 1])
                    if abs(o) <= 1e-12:
                        return False
        return True
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for l in range(k + 1, n):
                    if abs(_orient_norm3(p, i, j, k, l)) <= 1e-12:
                        return False
    return True


def unit_ball_volume(m: int) -> float:
    """kappa_M = pi^(M/2) / Gamma(M/2 + 1)."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def unit_sphere_measure(m: int) -> float:
    """omega_M = M * kappa_M, the surface measure of the unit sphere in R^M."""
    return m * unit_ball_volume(m)
