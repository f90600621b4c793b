"""Empty simplices, subset degrees and the set degree deg(X).

Degree of an M-subset S via dominance
-------------------------------------
Write every point as ``w = sum_i lam_i(w) x_i + t(w) nu`` with
``sum_i lam_i = 1``, where ``x_i`` are the points of S and ``nu`` is a normal
of their hyperplane.  For ``w`` and an apex ``z`` on the same side of the
hyperplane, the barycentric coordinates of ``w`` in ``conv(S + z)`` are
``t(w)/t(z)`` and ``lam_i(w) - t(w)/t(z) * lam_i(z)``.  Hence ``w`` lies in
the closed simplex iff ``key(w) >= key(z)`` componentwise, with
``key_i = lam_i / |t|``.  The apexes forming empty simplices are exactly the
maximal elements of the key vectors on each side, so a subset degree costs
one linear solve per point plus a dominance sweep.

For M = 2 the keys reduce to the two base angles of the triangle.  Sorting
every point's neighbours by angle once turns each pair into a linear walk,
giving deg(X) in O(n^3) with tiny constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._backend import USE_NUMBA, njit
from .geometry import EPS_GEOM, DegenerateSimplexError, PointSet, as_pointset, general_position, orientation
from .grid import GridIndex, _count_empty_kernel, _simplex_is_empty

EXACT_CAPS = {2: 400, 3: 60, 4: 30}
DEFAULT_CAP = 20


class ExactCapExceeded(ValueError):
    """The point set is too large for exact mode; use the local lower bound."""


@dataclass(frozen=True)
class SubsetDegree:
    indices: tuple[int, ...]
    degree: int


@dataclass(frozen=True)
class DegreeReport:
    degree: int
    argmax: SubsetDegree | None
    mode: str
    tests: int = field(default=0, compare=False)


def exact_cap(m: int) -> int:
    return EXACT_CAPS.get(m, DEFAULT_CAP)


def _check_indices(X: PointSet, idx, size: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if idx.size != size:
        raise ValueError(f"expected {size} indices, got {idx.size}")
    if len(np.unique(idx)) != size:
        raise ValueError("indices must be distinct")
    if idx.min() < 0 or idx.max() >= len(X):
        raise IndexError("index out of range")
    return idx


# ---------------------------------------------------------------- kernels

@njit
def _hyperplane_normal(points, subset):
    m = points.shape[1]
    E = np.empty((m - 1, m))
    for r in range(m - 1):
        for c in range(m):
            E[r, c] = points[subset[r + 1], c] - points[subset[0], c]
    nu = np.empty(m)
    minor = np.empty((m - 1, m - 1))
    for k in range(m):
        for r in range(m - 1):
            cc = 0
            for c in range(m):
                if c != k:
                    minor[r, cc] = E[r, c]
                    cc += 1
        d = np.linalg.det(minor) if m > 2 else minor[0, 0]
        nu[k] = d if k % 2 == 0 else -d
    return nu


@njit
def _count_maximal(keys, sel, count):
    """Number of rows of keys[sel[:count]] not weakly dominated by another row."""
    if count == 0:
        return 0
    m = keys.shape[1]
    first = np.empty(count)
    for t in range(count):
        first[t] = -keys[sel[t], 0]
    order = np.argsort(first)
    maxima = np.empty(count, np.int64)
    nmax = 0
    for t in range(count):
        z = sel[order[t]]
        dominated = False
        for s in range(nmax):
            a = maxima[s]
            dom = True
            for j in range(m):
                if keys[a, j] < keys[z, j]:
                    dom = False
                    break
            if dom:
                dominated = True
                break
        if not dominated:
            maxima[nmax] = z
            nmax += 1
    # ties in the first key can admit a row dominated by a later one
    result = 0
    for s in range(nmax):
        z = maxima[s]
        dominated = False
        for s2 in range(nmax):
            if s2 == s:
                continue
            a = maxima[s2]
            dom = True
            for j in range(m):
                if keys[a, j] < keys[z, j]:
                    dom = False
                    break
            if dom:
                dominated = True
                break
        if not dominated:
            result += 1
    return result


@njit
def _subset_degree_kernel(points, subset):
    n, m = points.shape
    nu = _hyperplane_normal(points, subset)
    nu_norm = 0.0
    for a in range(m):
        nu_norm += nu[a] * nu[a]
    nu_norm = math.sqrt(nu_norm)
    scale = 0.0
    for r in range(1, m):
        for a in range(m):
            scale = max(scale, abs(points[subset[r], a] - points[subset[0], a]))
    if nu_norm <= 1e-12 * scale ** (m - 1):
        return -1  # subset is affinely dependent
    A = np.zeros((m + 1, m + 1))
    for c in range(m):
        for r in range(m):
            A[r, c] = points[subset[c], r]
        A[m, c] = 1.0
    for r in range(m):
        A[r, m] = nu[r]
    Ainv = np.linalg.inv(A)
    keys = np.empty((n, m))
    pos = np.empty(n, np.int64)
    neg = np.empty(n, np.int64)
    npos = 0
    nneg = 0
    rhs = np.empty(m + 1)
    for w in range(n):
        skip = False
        for s in subset:
            if s == w:
                skip = True
        if skip:
            continue
        for r in range(m):
            rhs[r] = points[w, r]
        rhs[m] = 1.0
        sol = Ainv @ rhs
        t = sol[m]
        dist = 0.0
        for a in range(m):
            dist = max(dist, abs(points[w, a] - points[subset[0], a]))
        if abs(t) * nu_norm <= 1e-12 * (dist + scale):
            # on the hyperplane: inside conv(S) kills every apex, else irrelevant
            inside = True
            for r in range(m):
                if sol[r] < -1e-12:
                    inside = False
            if inside:
                return 0
            continue
        at = abs(t)
        for r in range(m):
            keys[w, r] = sol[r] / at
        if t > 0:
            pos[npos] = w
            npos += 1
        else:
            neg[nneg] = w
            nneg += 1
    return _count_maximal(keys, pos, npos) + _count_maximal(keys, neg, nneg)


@njit
def _degrees_of_subsets_kernel(points, subsets):
    out = np.empty(subsets.shape[0], np.int64)
    for s in range(subsets.shape[0]):
        out[s] = _subset_degree_kernel(points, subsets[s])
    return out


@njit
def _all_degrees_general_kernel(points, m, limit):
    n = points.shape[0]
    total = 1
    for i in range(m):
        total = total * (n - i) // (i + 1)
    out = np.empty(total, np.int64)
    idx = np.arange(m)
    pos = 0
    while True:
        out[pos] = _subset_degree_kernel(points, idx)
        if limit >= 0 and out[pos] > limit:
            return out[:pos + 1]
        pos += 1
        i = m - 1
        while i >= 0 and idx[i] == n - m + i:
            i -= 1
        if i < 0:
            return out
        idx[i] += 1
        for j in range(i + 1, m):
            idx[j] = idx[j - 1] + 1


@njit
def _planar_degree_matrix(points, limit):
    """deg(p, q) for all p < q, M = 2, by angular sweeps.

    With ``limit >= 0`` the sweep stops at the first pair whose degree
    exceeds ``limit``.
    """
    n = points.shape[0]
    deg = np.zeros((n, n), np.int64)
    if n < 3:
        return deg
    L = n - 1
    # per p: neighbours in CCW angular order, coordinates stored contiguously
    sx = np.empty((n, 2 * L))
    sy = np.empty((n, 2 * L))
    rank = np.empty((n, n), np.int64)
    left = np.empty((n, n), np.int64)
    ang = np.empty(L)
    ids = np.empty(L, np.int64)
    ext = np.empty(2 * L)
    for p in range(n):
        k = 0
        for q in range(n):
            if q != p:
                ang[k] = math.atan2(points[q, 1] - points[p, 1], points[q, 0] - points[p, 0])
                ids[k] = q
                k += 1
        srt = np.argsort(ang)
        for k in range(L):
            w = ids[srt[k]]
            sx[p, k] = points[w, 0]
            sy[p, k] = points[w, 1]
            sx[p, k + L] = points[w, 0]
            sy[p, k + L] = points[w, 1]
            rank[p, w] = k
            ext[k] = ang[srt[k]]
            ext[k + L] = ang[srt[k]] + 2.0 * math.pi
        # number of points strictly inside the half-turn CCW of each neighbour
        for k in range(L):
            left[p, ids[srt[k]]] = np.searchsorted(ext, ext[k] + math.pi) - k - 1
    for p in range(n):
        rx = sx[p]
        ry = sy[p]
        for q in range(p + 1, n):
            qx = points[q, 0]
            qy = points[q, 1]
            r = rank[p, q]
            nl = left[p, q]
            # left of p->q, increasing angle at p; empty iff new minimum angle at q
            cnt = 0
            if nl > 0:
                cnt = 1
                bx = rx[r + 1] - qx
                by = ry[r + 1] - qy
                for t in range(r + 2, r + nl + 1):
                    wx = rx[t] - qx
                    wy = ry[t] - qy
                    if bx * wy - by * wx > 0.0:
                        cnt += 1
                        bx = wx
                        by = wy
            # right side walks clockwise, i.e. backwards through the doubled row
            nr = L - 1 - nl
            if nr > 0:
                cnt += 1
                top = r + L
                bx = rx[top - 1] - qx
                by = ry[top - 1] - qy
                for t in range(top - 2, top - nr - 1, -1):
                    wx = rx[t] - qx
                    wy = ry[t] - qy
                    if bx * wy - by * wx < 0.0:
                        cnt += 1
                        bx = wx
                        by = wy
            deg[p, q] = cnt
            if limit >= 0 and cnt > limit:
                return deg
    return deg


# ---------------------------------------------------------------- numpy fallbacks

def _count_maximal_numpy(keys: np.ndarray) -> int:
    if len(keys) == 0:
        return 0
    # lexicographically descending, so any dominating row comes first
    keys = keys[np.lexsort((-keys).T[::-1])]
    maxima = np.empty((0, keys.shape[1]))
    for z in keys:
        if len(maxima) and np.any(np.all(maxima >= z, axis=1)):
            continue
        maxima = np.vstack([maxima, z])
    return len(maxima)


def _subset_degree_numpy(points: np.ndarray, subset: np.ndarray) -> int:
    n, m = points.shape
    base = points[subset]
    E = base[1:] - base[0]
    nu = np.array([(-1) ** k * (np.linalg.det(np.delete(E, k, axis=1)) if m > 2 else np.delete(E, k, axis=1)[0, 0])
                   for k in range(m)])
    scale = np.abs(E).max()
    nu_norm = np.linalg.norm(nu)
    if nu_norm <= 1e-12 * scale ** (m - 1):
        return -1
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = base.T
    A[m, :m] = 1.0
    A[:m, m] = nu
    others = np.setdiff1d(np.arange(n), subset)
    rhs = np.vstack([points[others].T, np.ones(len(others))])
    sol = np.linalg.solve(A, rhs).T
    t = sol[:, m]
    dist = np.abs(points[others] - base[0]).max(axis=1)
    flat = np.abs(t) * nu_norm <= 1e-12 * (dist + scale)
    if np.any(flat & np.all(sol[:, :m] >= -1e-12, axis=1)):
        return 0
    keep = ~flat
    keys = sol[keep, :m] / np.abs(t[keep])[:, None]
    t = t[keep]
    return _count_maximal_numpy(keys[t > 0]) + _count_maximal_numpy(keys[t < 0])


def _planar_degree_matrix_numpy(points: np.ndarray) -> np.ndarray:
    """Vectorised over q for each p: base angles, sort, running minimum."""
    n = len(points)
    deg = np.zeros((n, n), np.int64)
    if n < 3:
        return deg
    for p in range(n - 1):
        qs = np.arange(p + 1, n)
        ws = np.arange(n)
        d_p = points[ws] - points[p]                                  # (n, 2)
        d_pq = points[qs] - points[p]                                 # (k, 2)
        cross = d_pq[:, 0:1] * d_p[None, :, 1] - d_pq[:, 1:2] * d_p[None, :, 0]
        dot = d_pq[:, 0:1] * d_p[None, :, 0] + d_pq[:, 1:2] * d_p[None, :, 1]
        ang_p = np.arctan2(np.abs(cross), dot)                        # angle at p
        d_q = points[None, ws, :] - points[qs][:, None, :]            # (k, n, 2)
        d_qp = points[p] - points[qs]                                 # (k, 2)
        cross_q = d_qp[:, None, 0] * d_q[:, :, 1] - d_qp[:, None, 1] * d_q[:, :, 0]
        dot_q = d_qp[:, None, 0] * d_q[:, :, 0] + d_qp[:, None, 1] * d_q[:, :, 1]
        ang_q = np.arctan2(np.abs(cross_q), dot_q)                    # angle at q
        valid = np.ones((len(qs), n), bool)
        valid[:, p] = False
        valid[np.arange(len(qs)), qs] = False
        total = np.zeros(len(qs), np.int64)
        for side in (cross > 0, cross < 0):
            use = side & valid
            a_p = np.where(use, ang_p, np.inf)
            a_q = np.where(use, ang_q, np.inf)
            order = np.argsort(a_p, axis=1, kind="stable")
            sq = np.take_along_axis(a_q, order, axis=1)
            prev_min = np.minimum.accumulate(
                np.hstack([np.full((len(qs), 1), np.inf), sq[:, :-1]]), axis=1)
            hit = (sq < prev_min) & np.isfinite(sq)
            total += hit.sum(axis=1)
        deg[p, qs] = total
    return deg


def _count_empty_numpy(points: np.ndarray, tol: float = 1e-12) -> int:
    n, m = points.shape
    total = 0
    for simplex in combinations(range(n), m + 1):
        s = np.array(simplex)
        E = (points[s[1:]] - points[s[0]]).T
        mu = np.linalg.solve(E, (points - points[s[0]]).T).T
        lam0 = 1.0 - mu.sum(axis=1)
        inside = np.all(mu >= -tol, axis=1) & (lam0 >= -tol)
        inside[s] = False
        total += not inside.any()
    return total


# ---------------------------------------------------------------- public API

def _degrees_of_subsets(points: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    if len(subsets) == 0:
        return np.zeros(0, np.int64)
    if USE_NUMBA:
        out = _degrees_of_subsets_kernel(points, np.ascontiguousarray(subsets, dtype=np.int64))
    else:
        out = np.array([_subset_degree_numpy(points, s) for s in subsets], dtype=np.int64)
    if np.any(out < 0):
        raise DegenerateSimplexError("an M-subset is affinely dependent")
    return out


def is_empty_simplex(X, idx) -> bool:
    """True iff no further point of X lies in the closed simplex on ``idx``."""
    X = as_pointset(X)
    idx = _check_indices(X, idx, X.dim + 1)
    pts = np.ascontiguousarray(X.points)
    if orientation(pts[idx]) == 0:
        raise DegenerateSimplexError("simplex is degenerate")
    if USE_NUMBA:
        grid = GridIndex(pts)
        buf = np.empty(len(X), np.int64)
        return bool(_simplex_is_empty(*grid.arrays, idx, buf, EPS_GEOM))
    grid = GridIndex(pts)
    v = pts[idx]
    cand = grid.query_box(v.min(axis=0), v.max(axis=0))
    cand = np.setdiff1d(cand, idx)
    if len(cand) == 0:
        return True
    mu = np.linalg.solve((v[1:] - v[0]).T, (pts[cand] - v[0]).T).T
    inside = np.all(mu >= -EPS_GEOM, axis=1) & (1.0 - mu.sum(axis=1) >= -EPS_GEOM)
    return not inside.any()


def degree_of_subset(X, idx) -> int:
    """Number of apexes z completing the M-subset to an empty simplex."""
    X = as_pointset(X)
    idx = _check_indices(X, idx, X.dim)
    return int(_degrees_of_subsets(np.ascontiguousarray(X.points), idx[None, :])[0])


def all_subset_degrees(X) -> tuple[np.ndarray, np.ndarray]:
    """All M-subsets in lexicographic order and their degrees."""
    X = as_pointset(X)
    pts = np.ascontiguousarray(X.points)
    n, m = pts.shape
    if n < m:
        return np.zeros((0, m), np.int64), np.zeros(0, np.int64)
    # the angular sweep assumes no three collinear points; ties go the general way
    planar = m == 2 and general_position(X)
    if planar:
        mat = _planar_degree_matrix(pts, -1) if USE_NUMBA else _planar_degree_matrix_numpy(pts)
        i, j = np.triu_indices(n, 1)
        return np.column_stack([i, j]).astype(np.int64), mat[i, j]
    subsets = np.array(list(combinations(range(n), m)), dtype=np.int64).reshape(-1, m)
    if USE_NUMBA:
        degs = _all_degrees_general_kernel(pts, m, -1)
        if np.any(degs < 0):
            raise DegenerateSimplexError("an M-subset is affinely dependent")
    else:
        degs = _degrees_of_subsets(pts, subsets)
    return subsets, degs


def _report(subsets, degs, mode, tests) -> DegreeReport:
    if len(degs) == 0:
        return DegreeReport(0, None, mode, tests)
    k = int(np.argmax(degs))  # first maximum = lexicographically smallest tuple
    best = SubsetDegree(tuple(int(i) for i in subsets[k]), int(degs[k]))
    return DegreeReport(best.degree, best, mode, tests)


def degree_of_set_exact(X, cap: int | None = None) -> DegreeReport:
    X = as_pointset(X)
    n, m = len(X), X.dim
    if n < m + 1:
        raise ValueError(f"need at least M+1 = {m + 1} points")
    cap = exact_cap(m) if cap is None else cap
    if n > cap:
        raise ExactCapExceeded(
            f"n = {n} exceeds the exact-mode cap {cap} for M = {m}; use degree_lower_bound_local"
        )
    subsets, degs = all_subset_degrees(X)
    return _report(subsets, degs, "exact", len(subsets) * (n - m))


def degree_lower_bound_local(X, T: float) -> DegreeReport:
    """Max subset degree over the T-clustered subsets counted by N_T."""
    from .functionals import clustered_subsets

    if T <= 0:
        raise ValueError("T must be positive")
    X = as_pointset(X)
    subsets = clustered_subsets(X, T)
    degs = _degrees_of_subsets(np.ascontiguousarray(X.points), subsets)
    return _report(subsets, degs, "local-lower-bound", len(subsets) * max(len(X) - X.dim, 0))


def count_empty_simplices(X) -> int:
    """Number of (M+1)-subsets spanning an empty simplex (grid-pruned scan)."""
    X = as_pointset(X)
    pts = np.ascontiguousarray(X.points)
    if USE_NUMBA:
        grid = GridIndex(pts)
        return int(_count_empty_kernel(*grid.arrays, EPS_GEOM))
    return _count_empty_numpy(pts)


def degree_at_most(X, t: int) -> bool:
    """deg(X) <= t, stopping at the first subset whose degree exceeds t."""
    X = as_pointset(X)
    pts = np.ascontiguousarray(X.points)
    n, m = pts.shape
    if n < m + 1:
        raise ValueError(f"need at least M+1 = {m + 1} points")
    if t < 0:
        return False
    if USE_NUMBA:
        if m == 2 and general_position(X):
            return int(_planar_degree_matrix(pts, int(t)).max()) <= t
        degs = _all_degrees_general_kernel(pts, m, int(t))
        if np.any(degs < 0):
            raise DegenerateSimplexError("an M-subset is affinely dependent")
        return int(degs.max()) <= t
    return int(all_subset_degrees(X)[1].max()) <= t
