"""Uniform spatial grid index over a point set.

Points are bucketed into axis-aligned cells and stored in CSR order
(``order[starts[c]:starts[c+1]]`` are the points of cell ``c``).  Queries
visit only the cells overlapping a query box.  Used for T-neighbourhoods and
for emptiness tests of small simplices.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import USE_NUMBA, njit

MAX_CELLS = 1 << 22


class GridIndex:
    def __init__(self, points, cell: float | None = None):
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        n, m = pts.shape
        self.points = pts
        if n == 0:
            lo = np.zeros(m)
            extent = np.ones(m)
        else:
            lo = pts.min(axis=0)
            extent = np.maximum(pts.max(axis=0) - lo, 1e-300)
        if cell is None:
            # n^(-1/M) * diameter: O(1) points per cell on average
            cell = float(np.linalg.norm(extent)) * max(n, 1) ** (-1.0 / m)
        # keep the table bounded for tiny cells
        floor_cell = float(np.prod(extent) / MAX_CELLS) ** (1.0 / m)
        cell = max(float(cell), floor_cell, 1e-300)
        shape = np.floor(extent / cell).astype(np.int64) + 1
        self.lo = lo
        self.cell = cell
        self.shape = shape
        keys = _cell_keys(pts, lo, cell, shape)
        self.order = np.argsort(keys, kind="stable").astype(np.int64)
        ncell = int(np.prod(shape))
        self.starts = np.searchsorted(keys[self.order], np.arange(ncell + 1)).astype(np.int64)

    @property
    def arrays(self):
        return self.points, self.lo, self.cell, self.shape, self.order, self.starts

    def neighbors(self, T: float) -> tuple[np.ndarray, np.ndarray]:
        """CSR lists of all j != i with |x_j - x_i| <= T, ascending per row."""
        if USE_NUMBA:
            return _neighbors_kernel(*self.arrays, float(T))
        return _neighbors_numpy(self.points, float(T))

    def query_box(self, qlo, qhi) -> np.ndarray:
        """Indices of points whose cell overlaps the box [qlo, qhi]."""
        lo_c = np.clip(np.floor((np.asarray(qlo) - self.lo) / self.cell).astype(np.int64), 0, self.shape - 1)
        hi_c = np.clip(np.floor((np.asarray(qhi) - self.lo) / self.cell).astype(np.int64), 0, self.shape - 1)
        ranges = [np.arange(a, b + 1) for a, b in zip(lo_c, hi_c)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        flat = np.ravel_multi_index([g.ravel() for g in mesh], self.shape)
        parts = [self.order[self.starts[c]:self.starts[c + 1]] for c in flat]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def _cell_keys(pts, lo, cell, shape):
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    idx = np.floor((pts - lo) / cell).astype(np.int64)
    idx = np.minimum(np.maximum(idx, 0), shape - 1)
    return np.ravel_multi_index(idx.T, shape).astype(np.int64)


@njit
def _cell_range(q_lo, q_hi, lo, cell, shape, out_lo, out_hi):
    m = shape.shape[0]
    for a in range(m):
        c0 = int(math.floor((q_lo[a] - lo[a]) / cell))
        c1 = int(math.floor((q_hi[a] - lo[a]) / cell))
        if c0 < 0:
            c0 = 0
        if c1 > shape[a] - 1:
            c1 = shape[a] - 1
        out_lo[a] = c0
        out_hi[a] = c1
        if c1 < c0:
            return False
    return True


@njit
def _box_candidates(q_lo, q_hi, lo, cell, shape, order, starts, buf):
    """Fill ``buf`` with point indices in cells overlapping the box; return count."""
    m = shape.shape[0]
    c_lo = np.empty(m, np.int64)
    c_hi = np.empty(m, np.int64)
    if not _cell_range(q_lo, q_hi, lo, cell, shape, c_lo, c_hi):
        return 0
    cur = c_lo.copy()
    cnt = 0
    while True:
        key = 0
        for a in range(m):
            key = key * shape[a] + cur[a]
        for t in range(starts[key], starts[key + 1]):
            buf[cnt] = order[t]
            cnt += 1
        a = m - 1
        while a >= 0:
            cur[a] += 1
            if cur[a] <= c_hi[a]:
                break
            cur[a] = c_lo[a]
            a -= 1
        if a < 0:
            return cnt


@njit
def _neighbors_kernel(points, lo, cell, shape, order, starts, T):
    n, m = points.shape
    counts = np.zeros(n + 1, np.int64)
    buf = np.empty(n, np.int64)
    q_lo = np.empty(m)
    q_hi = np.empty(m)
    T2 = T * T
    for sweep in range(2):
        if sweep == 1:
            for i in range(n):
                counts[i + 1] += counts[i]
            indices = np.empty(counts[n], np.int64)
        else:
            indices = np.empty(0, np.int64)
        for i in range(n):
            for a in range(m):
                q_lo[a] = points[i, a] - T
                q_hi[a] = points[i, a] + T
            cnt = _box_candidates(q_lo, q_hi, lo, cell, shape, order, starts, buf)
            k = 0
            for t in range(cnt):
                j = buf[t]
                if j == i:
                    continue
                d2 = 0.0
                for a in range(m):
                    diff = points[j, a] - points[i, a]
                    d2 += diff * diff
                if d2 <= T2:
                    if sweep == 1:
                        indices[counts[i] + k] = j
                    k += 1
            if sweep == 0:
                counts[i + 1] = k
            else:
                indices[counts[i]:counts[i] + k].sort()
    return counts, indices


def _neighbors_numpy(points, T):
    n = len(points)
    rows, cols = [], []
    for start in range(0, n, 1024):
        block = points[start:start + 1024]
        d2 = ((block[:, None, :] - points[None, :, :]) ** 2).sum(-1)
        r, c = np.nonzero(d2 <= T * T)
        r = r + start
        keep = r != c
        rows.append(r[keep])
        cols.append(c[keep])
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    indptr = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    # np.nonzero is row-major, so columns are already ascending per row
    return indptr, cols.astype(np.int64)


@njit
def _simplex_inverse(points, simplex):
    m = points.shape[1]
    E = np.empty((m, m))
    for c in range(m):
        for r in range(m):
            E[r, c] = points[simplex[c + 1], r] - points[simplex[0], r]
    return np.linalg.inv(E)


@njit
def _in_closed_simplex(points, simplex, inv, w, tol):
    m = points.shape[1]
    total = 0.0
    for r in range(m):
        mu = 0.0
        for c in range(m):
            mu += inv[r, c] * (points[w, c] - points[simplex[0], c])
        if mu < -tol:
            return False
        total += mu
    return 1.0 - total >= -tol


@njit
def _simplex_is_empty(points, lo, cell, shape, order, starts, simplex, buf, tol):
    m = points.shape[1]
    q_lo = np.empty(m)
    q_hi = np.empty(m)
    for a in range(m):
        q_lo[a] = np.inf
        q_hi[a] = -np.inf
        for v in simplex:
            q_lo[a] = min(q_lo[a], points[v, a])
            q_hi[a] = max(q_hi[a], points[v, a])
    inv = _simplex_inverse(points, simplex)
    cnt = _box_candidates(q_lo, q_hi, lo, cell, shape, order, starts, buf)
    for t in range(cnt):
        w = buf[t]
        is_vertex = False
        for v in simplex:
            if v == w:
                is_vertex = True
        if is_vertex:
            continue
        if _in_closed_simplex(points, simplex, inv, w, tol):
            return False
    return True


@njit
def _count_empty_kernel(points, lo, cell, shape, order, starts, tol):
    n, m = points.shape
    k = m + 1
    if n < k:
        return 0
    idx = np.arange(k)
    buf = np.empty(n, np.int64)
    total = 0
    while True:
        if _simplex_is_empty(points, lo, cell, shape, order, starts, idx, buf, tol):
            total += 1
        i = k - 1
        while i >= 0 and idx[i] == n - k + i:
            i -= 1
        if i < 0:
            return total
        idx[i] += 1
        for j in range(i + 1, k):
            idx[j] = idx[j - 1] + 1
