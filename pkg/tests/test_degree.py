from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from emptysimplex.degree import (
    ExactCapExceeded,
    all_subset_degrees,
    count_empty_simplices,
    degree_at_most,
    degree_lower_bound_local,
    degree_of_set_exact,
    degree_of_subset,
    is_empty_simplex,
)
from emptysimplex.geometry import DegenerateSimplexError, PointSet

SQUARE = PointSet([(0, 0), (1, 0), (0, 1), (1, 1)])


def uniform(seed, n, m):
    return PointSet(np.random.default_rng(seed).random((n, m)))


class TestEmptySimplex:
    def test_three_points(self):
        assert is_empty_simplex(PointSet([(0, 0), (1, 0), (0, 1)]), [0, 1, 2])

    def test_centroid_inside(self):
        X = PointSet([(0, 0), (3, 0), (0, 3), (1, 1)])
        assert not is_empty_simplex(X, [0, 1, 2])
        assert is_empty_simplex(X, [0, 1, 3])

    def test_square_triangles(self):
        table = oracles.empty_table(SQUARE.points)
        for c in combinations(range(4), 3):
            assert is_empty_simplex(SQUARE, c) is True is table[c]

    def test_boundary_point_violates_emptiness(self):
        X = PointSet([(0, 0), (2, 0), (0, 2), (1, 0)])
        assert not is_empty_simplex(X, [0, 1, 2])

    def test_degenerate_and_bad_indices(self):
        X = PointSet([(0, 0), (1, 1), (2, 2), (0, 1)])
        with pytest.raises(DegenerateSimplexError):
            is_empty_simplex(X, [0, 1, 2])
        with pytest.raises(ValueError):
            is_empty_simplex(X, [0, 0, 1])
        with pytest.raises(ValueError):
            is_empty_simplex(X, [0, 1])


class TestSubsetDegree:
    def test_minimal_set(self):
        X = uniform(0, 4, 3)
        for s in combinations(range(4), 3):
            assert degree_of_subset(X, s) == 1

    def test_square_pairs(self):
        for s in combinations(range(4), 2):
            assert degree_of_subset(SQUARE, s) == 2

    def test_square_with_center(self):
        X = PointSet([(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)])
        ref = oracles.subset_degrees(X.points)
        assert degree_of_subset(X, [0, 1]) == ref[(0, 1)] == 1
        for s, d in ref.items():
            assert degree_of_subset(X, s) == d


class TestSetDegree:
    def test_minimal(self):
        rep = degree_of_set_exact(uniform(1, 3, 2))
        assert rep.degree == 1 and rep.mode == "exact"
        assert rep.argmax.indices == (0, 1)

    def test_square(self):
        rep = degree_of_set_exact(SQUARE)
        assert rep.degree == 2
        assert rep.argmax.indices == (0, 1)  # lexicographically smallest maximiser

    def test_n30_against_oracle(self):
        X = uniform(30, 30, 2)
        assert degree_of_set_exact(X).degree == oracles.set_degree(X.points)

    def test_cap(self):
        with pytest.raises(ExactCapExceeded):
            degree_of_set_exact(uniform(2, 12, 2), cap=10)
        with pytest.raises(ValueError):
            degree_of_set_exact(uniform(2, 2, 2))

    @pytest.mark.parametrize("m,n", [(2, 14), (3, 10), (4, 8)])
    def test_all_subsets_against_oracle(self, m, n):
        X = uniform(100 + m, n, m)
        subsets, degs = all_subset_degrees(X)
        ref = oracles.subset_degrees(X.points)
        assert [tuple(s) for s in subsets.tolist()] == sorted(ref)
        assert degs.tolist() == [ref[tuple(s)] for s in subsets.tolist()]

    @pytest.mark.parametrize("m,n", [(2, 20), (3, 12), (4, 9)])
    def test_degree_sum_identity(self, m, n):
        X = uniform(200 + m, n, m)
        _, degs = all_subset_degrees(X)
        e = count_empty_simplices(X)
        assert e == oracles.empty_count(X.points)
        assert int(degs.sum()) == (m + 1) * e
        assert degs.max() <= n - m

    def test_empty_count_examples(self):
        assert count_empty_simplices(uniform(3, 4, 3)) == 1
        assert count_empty_simplices(SQUARE) == 4

    @given(seed=st.integers(0, 2**32 - 1), m=st.sampled_from([2, 3]))
    @settings(max_examples=25, deadline=None)
    def test_affine_invariance(self, seed, m):
        rng = np.random.default_rng(seed)
        n = 12 if m == 2 else 9
        P = rng.random((n, m))
        A = rng.normal(size=(m, m))
        if abs(np.linalg.det(A)) < 0.1:
            A += 2 * np.eye(m)
        Q = P @ A.T + rng.normal(size=m)
        assert np.array_equal(all_subset_degrees(PointSet(P))[1], all_subset_degrees(PointSet(Q))[1])

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        P = rng.random((15, 2))
        perm = rng.permutation(15)
        a = degree_of_set_exact(PointSet(P)).degree
        b = degree_of_set_exact(PointSet(P[perm])).degree
        assert a == b


class TestLocal:
    def test_large_T_equals_exact(self):
        X = uniform(5, 25, 2)
        assert degree_lower_bound_local(X, 10.0).degree == degree_of_set_exact(X).degree

    def test_tiny_T_is_zero(self):
        X = uniform(5, 25, 2)
        rep = degree_lower_bound_local(X, 1e-6)
        assert rep.degree == 0 and rep.argmax is None
        assert rep.mode == "local-lower-bound"

    def test_lower_bound_and_monotone(self):
        X = uniform(6, 30, 2)
        exact = oracles.set_degree(X.points)
        prev = 0
        for T in [1 / 30, 0.05, 0.1, 0.2, 0.5, 2.0]:
            d = degree_lower_bound_local(X, T).degree
            assert prev <= d <= exact
            prev = d
        assert prev == exact

    def test_3d(self):
        X = uniform(7, 14, 3)
        assert degree_lower_bound_local(X, 0.4).degree <= degree_of_set_exact(X).degree


@pytest.mark.parametrize("m,n", [(2, 25), (3, 12)])
def test_degree_at_most(m, n):
    X = uniform(40 + m, n, m)
    d = degree_of_set_exact(X).degree
    assert degree_at_most(X, d)
    assert not degree_at_most(X, d - 1)
    assert degree_at_most(X, n - m)
    assert not degree_at_most(X, 0)
