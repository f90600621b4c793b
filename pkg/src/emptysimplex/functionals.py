"""The clustered-subset counts N_T(X) and their degree-weighted sums F_T^(k)(X).

An M-subset is T-clustered when some member x_i has every point of the
subset in the closed ball B_T(x_i).  Such a subset consists of an anchor and
M-1 of its T-neighbours, so enumeration only walks neighbour lists.  A subset
that qualifies through several anchors is reported once, by its smallest
qualifying anchor.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._backend import USE_NUMBA, njit
from .degree import _degrees_of_subsets
from .geometry import as_pointset
from .grid import GridIndex


@dataclass(frozen=True)
class FunctionalValue:
    T: float
    k: int
    value: float
    subsets: int


@njit
def _covers(points, j, members, T2):
    m = points.shape[1]
    for s in members:
        d2 = 0.0
        for a in range(m):
            diff = points[s, a] - points[j, a]
            d2 += diff * diff
        if d2 > T2:
            return False
    return True


@njit
def _clustered_kernel(points, indptr, indices, m, T):
    n = points.shape[0]
    T2 = T * T
    r = m - 1
    members = np.empty(m, np.int64)
    comb = np.empty(r, np.int64)
    out = np.empty((0, m), np.int64)
    for sweep in range(2):
        total = 0
        for i in range(n):
            start = indptr[i]
            k = indptr[i + 1] - start
            if k < r:
                continue
            for a in range(r):
                comb[a] = a
            while True:
                members[0] = i
                for a in range(r):
                    members[a + 1] = indices[start + comb[a]]
                keep = True
                for a in range(r):
                    j = members[a + 1]
                    if j < i and _covers(points, j, members, T2):
                        keep = False
                        break
                if keep:
                    if sweep == 1:
                        srt = np.sort(members)
                        for a in range(m):
                            out[total, a] = srt[a]
                    total += 1
                a = r - 1
                while a >= 0 and comb[a] == k - r + a:
                    a -= 1
                if a < 0:
                    break
                comb[a] += 1
                for b in range(a + 1, r):
                    comb[b] = comb[b - 1] + 1
        if sweep == 0:
            out = np.empty((total, m), np.int64)
    return out


def _clustered_numpy(points, indptr, indices, m, T):
    rows = []
    for i in range(len(points)):
        nb = indices[indptr[i]:indptr[i + 1]]
        for comb in combinations(nb, m - 1):
            members = np.array((i,) + comb)
            lower = [j for j in comb if j < i]
            if lower:
                d = np.linalg.norm(points[members][None, :, :] - points[lower][:, None, :], axis=2)
                if np.any(np.all(d <= T, axis=1)):
                    continue
            rows.append(np.sort(members))
    return np.array(rows, dtype=np.int64).reshape(-1, m)


def clustered_subsets(X, T: float) -> np.ndarray:
    """Sorted index rows of all T-clustered M-subsets, in lexicographic order."""
    if T <= 0:
        raise ValueError("T must be positive")
    X = as_pointset(X)
    pts = np.ascontiguousarray(X.points)
    m = X.dim
    if len(X) < m:
        return np.zeros((0, m), np.int64)
    indptr, indices = GridIndex(pts, cell=T).neighbors(T)
    if USE_NUMBA:
        rows = _clustered_kernel(pts, indptr, indices, m, float(T))
    else:
        rows = _clustered_numpy(pts, indptr, indices, m, float(T))
    if len(rows) > 1:
        rows = rows[np.lexsort(rows.T[::-1])]
    return rows


def n_t(X, T: float) -> int:
    """N_T(X): number of T-clustered M-subsets."""
    return len(clustered_subsets(X, T))


def f_t_k(X, T: float, k: int) -> float:
    """F_T^(k)(X): sum over T-clustered M-subsets of deg(subset; X)^k."""
    return f_t_k_value(X, T, k).value


def f_t_k_value(X, T: float, k: int) -> FunctionalValue:
    if k < 0:
        raise ValueError("k must be nonnegative")
    X = as_pointset(X)
    subsets = clustered_subsets(X, T)
    if k == 0:
        return FunctionalValue(T, 0, float(len(subsets)), len(subsets))
    degs = _degrees_of_subsets(np.ascontiguousarray(X.points), subsets)
    # exact integer arithmetic before the final conversion
    value = sum(int(d) ** k for d in degs)
    return FunctionalValue(T, k, float(value), len(subsets))


def pair_count_within(X, T: float) -> int:
    """Number of unordered pairs at distance <= T (N_T for M = 2)."""
    X = as_pointset(X)
    indptr, _ = GridIndex(np.ascontiguousarray(X.points), cell=T).neighbors(T)
    return int(indptr[-1]) // 2
