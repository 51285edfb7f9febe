from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given

from kcvrp.matching import (MatchingError, min_matching_on_forbidden, min_perfect_matching,
                            min_perfect_matching_sparse)
from kcvrp.oracle import brute_force_matching
from kcvrp.instance import gen_random

from conftest import metrics


def test_forced_pairs():
    w = np.full((4, 4), 10.0)
    np.fill_diagonal(w, 0)
    w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1
    m = min_perfect_matching(range(4), w)
    assert m.pairs == ((0, 1), (2, 3)) and m.weight == 2


def test_odd_count_rejected():
    with pytest.raises(MatchingError, match="odd"):
        min_perfect_matching(range(3), np.zeros((3, 3)))


def test_eight_vertices_frozen():
    # brute force over all 105 pairings of this instance gives 1.1779553245166874
    inst = gen_random(8, 3, "unit", "euclidean", 11)
    m = min_perfect_matching(range(1, 9), inst.weights)
    assert m.weight == pytest.approx(1.1779553245166874, abs=1e-12)
    assert m.weight == pytest.approx(brute_force_matching(range(1, 9), inst.weights), abs=1e-12)


def test_forbidden_leaves_two_candidates():
    w = np.array([[0, 1, 2, 3], [1, 0, 5, 7], [2, 5, 0, 1], [3, 7, 1, 0]], dtype=float)
    m = min_matching_on_forbidden(range(4), w, [(0, 1), (2, 3)])
    assert m.weight == min(2 + 7, 3 + 5)


def test_all_pairs_forbidden_is_infeasible():
    with pytest.raises(MatchingError, match="infeasible"):
        min_matching_on_forbidden([0, 1], np.zeros((2, 2)), [(1, 0)])
    with pytest.raises(MatchingError, match="infeasible"):
        min_matching_on_forbidden([0, 1], np.zeros((2, 2)), [(1, 0)], threshold=0)


def test_callable_weights():
    m = min_perfect_matching([1, 2, 3, 4], lambda a, b: abs(a - b))
    assert m.weight == 2


@given(metrics(m_min=2, m_max=10))
def test_dp_and_blossom_equal_brute_force(w):
    m = len(w) - len(w) % 2
    verts = range(m)
    expected = brute_force_matching(verts, w)
    dp = min_perfect_matching(verts, w)
    blossom = min_perfect_matching(verts, w, threshold=0)
    assert dp.weight == pytest.approx(expected, abs=1e-9)
    assert blossom.weight == pytest.approx(expected, abs=1e-9)
    for res in (dp, blossom):
        assert sorted(v for p in res.pairs for v in p) == list(verts)


@given(metrics(m_min=4, m_max=8))
def test_forbidden_matches_brute_force(w):
    m = len(w) - len(w) % 2
    verts = list(range(m))
    first = min_perfect_matching(verts, w)
    for threshold in (None, 0):
        res = min_matching_on_forbidden(verts, w, first.pairs, threshold=threshold)
        assert not set(res.pairs) & set(first.pairs)
        assert res.weight == pytest.approx(brute_force_matching(verts, w, first.pairs), abs=1e-9)


def test_sparse_matching():
    edges = {(0, 1): 1.0, (1, 2): 0.5, (2, 3): 1.0, (0, 3): 0.5}
    pairs = min_perfect_matching_sparse(range(4), edges)
    assert set(map(frozenset, pairs)) == {frozenset((0, 3)), frozenset((1, 2))}
    with pytest.raises(MatchingError):
        min_perfect_matching_sparse(range(4), {(0, 1): 1.0, (0, 2): 1.0})
