from __future__ import annotations

import itertools

import numpy as np
import pytest

from crowdtrack.assignment import brute_force_solve, solve, solve_sparse


def permutation_optimum(m: np.ndarray) -> float:
    """Best full assignment of a square matrix with non-negative entries."""
    n = m.shape[0]
    return max(sum(m[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def test_one_by_one():
    a = solve([[5]])
    assert a.pairs == [(0, 0)] and a.objective == 5


def test_empty():
    a = solve(np.zeros((0, 3)))
    assert a.pairs == [] and a.objective == 0


def test_zero_matrix():
    assert solve([[0]]).objective == 0
    assert brute_force_solve([[0]]).objective == 0


def test_tie_broken_lexicographically():
    for solver in (solve, brute_force_solve):
        a = solver([[1, 2], [3, 4]])
        assert a.objective == 5
        assert a.pairs == [(0, 0), (1, 1)]


def test_five_by_five_matches_permutations():
    rng = np.random.default_rng(11)
    for _ in range(20):
        m = rng.integers(0, 20, (5, 5)).astype(float)
        assert solve(m).objective == permutation_optimum(m)


def test_minimize():
    m = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    a = solve(m, sense="minimize")
    assert a.objective == brute_force_solve(m, sense="minimize").objective == 5.0


def test_rectangular_both_orientations():
    m = np.array([[1.0, 9.0, 3.0]])
    assert solve(m).pairs == [(0, 1)]
    assert solve(m.T).pairs == [(1, 0)]


def test_forbidden_pairs_avoided():
    m = np.array([[10.0, 1.0], [1.0, 10.0]])
    a = solve(m, forbidden=lambda r, c: r == c)
    assert a.pairs == [(0, 1), (1, 0)] and a.objective == 2.0
    mask = np.array([[True, False], [False, False]])
    a = solve(m, forbidden=mask)
    assert a.pairs == [(1, 1)] and a.objective == 10.0


def test_forbidden_mask_shape_checked():
    with pytest.raises(ValueError):
        solve(np.ones((2, 2)), forbidden=np.zeros((3, 3), dtype=bool))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        solve([[np.inf, 1.0]])


def test_bad_sense():
    with pytest.raises(ValueError):
        solve([[1.0]], sense="largest")


def test_brute_force_dimension_guard():
    with pytest.raises(ValueError):
        brute_force_solve(np.ones((9, 2)))


def test_random_agreement_with_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        r, c = rng.integers(1, 8, 2)
        m = rng.normal(size=(r, c)).round(2)
        forbidden = rng.random((r, c)) < 0.2
        for sense in ("maximize", "minimize"):
            assert solve(m, forbidden, sense).objective == pytest.approx(
                brute_force_solve(m, forbidden, sense).objective, abs=1e-9)


def test_ties_agree_with_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r, c = rng.integers(1, 6, 2)
        m = rng.integers(0, 3, (r, c)).astype(float)
        assert solve(m).pairs == brute_force_solve(m).pairs


def test_scaling_and_shift_invariance():
    rng = np.random.default_rng(9)
    for _ in range(30):
        m = rng.uniform(1, 10, (4, 4))
        base = solve(m)
        scaled = solve(3.0 * m)
        assert scaled.objective == pytest.approx(3.0 * base.objective)
        assert scaled.pairs == base.pairs
        assert solve(m + 7.0).pairs == base.pairs


def test_sparse_matches_dense():
    rng = np.random.default_rng(2)
    for _ in range(50):
        dense = rng.uniform(0, 1, (6, 5)) * (rng.random((6, 5)) < 0.4)
        rows, cols = np.nonzero(dense)
        sparse = solve_sparse(rows, cols, dense[rows, cols], dense.shape)
        ref = brute_force_solve(dense, forbidden=dense == 0)
        assert sparse.objective == pytest.approx(ref.objective)


def test_sparse_rejects_non_positive():
    with pytest.raises(ValueError):
        solve_sparse([0], [0], [0.0], (1, 1))
