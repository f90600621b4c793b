import numpy as np

from emptysimplex.grid import GridIndex


def brute_neighbors(P, T):
    D = np.linalg.norm(P[:, None] - P[None], axis=-1)
    np.fill_diagonal(D, np.inf)
    return [np.flatnonzero(row <= T).tolist() for row in D]


def test_neighbors_match_brute_force():
    for m, n in [(2, 300), (3, 200)]:
        P = np.random.default_rng(m).random((n, m))
        g = GridIndex(P)
        for T in [0.01, 0.07, 0.3, 2.0]:
            indptr, idx = g.neighbors(T)
            got = [idx[indptr[i]:indptr[i + 1]].tolist() for i in range(n)]
            assert got == brute_neighbors(P, T)


def test_query_box_superset():
    P = np.random.default_rng(0).random((500, 2))
    g = GridIndex(P, cell=0.05)
    lo, hi = np.array([0.2, 0.3]), np.array([0.4, 0.35])
    cand = set(g.query_box(lo, hi).tolist())
    inside = np.flatnonzero(np.all((P >= lo) & (P <= hi), axis=1))
    assert set(inside.tolist()) <= cand
    assert len(cand) < 500


def test_tiny_cell_is_bounded():
    P = np.random.default_rng(0).random((50, 2))
    g = GridIndex(P, cell=1e-12)
    assert np.prod(g.shape) <= 2 * (1 << 22)
    indptr, idx = g.neighbors(0.1)
    assert indptr[-1] == sum(len(r) for r in brute_neighbors(P, 0.1))


def test_empty_and_single():
    g = GridIndex(np.zeros((0, 2)))
    indptr, idx = g.neighbors(1.0)
    assert indptr.tolist() == [0] and len(idx) == 0
    g = GridIndex(np.array([[0.5, 0.5]]))
    assert g.neighbors(1.0)[0].tolist() == [0, 0]
