"""Brute-force reference implementations used only by the tests.

These deliberately avoid the package's algorithms: containment is decided by
solving for barycentric coordinates with a dense linear solve, and every
(M+1)-subset is checked against every other point.
"""
from itertools import combinations
from math import comb

import numpy as np


def barycentric(simplex, pts):
    """Barycentric coordinates of pts (k, M) w.r.t. simplex (M+1, M)."""
    m = simplex.shape[1]
    A = np.vstack([simplex.T, np.ones(m + 1)])
    rhs = np.vstack([np.asarray(pts).T, np.ones(len(pts))])
    return np.linalg.solve(A, rhs).T


def empty_table(P, tol=1e-12):
    """Dict (M+1)-tuple -> bool: no other point in the closed simplex.

    All simplices are solved at once: for each one, the barycentric
    coordinates of every point come from a batched dense solve.
    """
    P = np.asarray(P, dtype=np.float64)
    n, m = P.shape
    combos = np.array(list(combinations(range(n), m + 1)), dtype=np.int64)
    if len(combos) == 0:
        return {}
    S = P[combos]                                          # (C, M+1, M)
    A = np.concatenate([S.transpose(0, 2, 1), np.ones((len(S), 1, m + 1))], axis=1)
    vol = np.abs(np.linalg.det(S[:, 1:] - S[:, :1]))
    flat = vol < 1e-14
    A[flat] = np.eye(m + 1)                                 # placeholder, overridden below
    rhs = np.vstack([P.T, np.ones(n)])                      # (M+1, n)
    lam = np.linalg.solve(A, np.broadcast_to(rhs, (len(S), m + 1, n)))
    inside = np.all(lam >= -tol, axis=1)                    # (C, n)
    inside[np.arange(len(combos))[:, None], combos] = False
    empty = ~inside.any(axis=1)
    # flat: the middle point of a collinear triple lies on its hull
    empty[flat] = False
    return {tuple(c): bool(e) for c, e in zip(combos.tolist(), empty)}


def subset_degrees(P):
    """Dict M-tuple -> number of apexes completing it to an empty simplex."""
    P = np.asarray(P, dtype=np.float64)
    n, m = P.shape
    table = empty_table(P)
    deg = {}
    for s in combinations(range(n), m):
        d = 0
        for z in range(n):
            if z in s:
                continue
            d += table[tuple(sorted(s + (z,)))]
        deg[s] = d
    return deg


def set_degree(P):
    return max(subset_degrees(P).values())


def empty_count(P):
    return sum(empty_table(P).values())


def clustered(P, T):
    """Sorted list of M-tuples with some member's closed T-ball covering the tuple."""
    P = np.asarray(P, dtype=np.float64)
    n, m = P.shape
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
    res = []
    for s in combinations(range(n), m):
        sub = D[np.ix_(s, s)]
        if np.any(np.all(sub <= T, axis=1)):
            res.append(s)
    return res


def n_t(P, T):
    return len(clustered(P, T))


def f_t_k(P, T, k):
    deg = subset_degrees(P)
    return sum(deg[s] ** k for s in clustered(P, T))


def binom(n, m):
    return comb(n, m)
