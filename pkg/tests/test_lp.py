from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given

from kcvrp.bounds import l_even
from kcvrp.instance import gen_random, make_instance
from kcvrp.lp import EnumerationLimit, enumerate_tours, gamma_select, solve_cover_lp
from kcvrp.oracle import exact_cvrp
from kcvrp.tsp import cycle_weight

from conftest import instances, unit_metric


def test_enumeration_counts():
    assert len(enumerate_tours(make_instance(3, "unit", [1] * 3, unit_metric(4)))) == 7
    assert len(enumerate_tours(make_instance(3, "unsplittable", [2, 2], unit_metric(3)))) == 2


def test_enumeration_limit_is_loud():
    with pytest.raises(EnumerationLimit):
        enumerate_tours(gen_random(9, 4, "unit", seed=1), limit=50)


@given(instances(variants=("unsplittable", "unit"), ks=(3, 4, 5), n_max=8))
def test_tours_are_exact_and_complete(inst):
    tours = enumerate_tours(inst)
    expected = {frozenset(c) for r in range(1, inst.n + 1)
                for c in itertools.combinations(inst.customers, r)
                if sum(inst.demand(v) for v in c) <= inst.k}
    assert set(tours.index()) == expected and len(tours) == len(expected)
    for mem, order, wt in zip(tours.members, tours.orders, tours.weights):
        assert sorted(order) == list(mem)
        brute = min(cycle_weight(inst.weights, (0,) + p) for p in itertools.permutations(mem))
        assert wt == pytest.approx(brute, abs=1e-9)
        assert cycle_weight(inst.weights, (0,) + order) == pytest.approx(wt, abs=1e-9)


def test_cover_lp_picks_cheap_big_tour():
    w = np.zeros((4, 4))
    w[0, 1:] = w[1:, 0] = 1
    inst = make_instance(3, "unit", [1] * 3, w)
    tours = enumerate_tours(inst)
    sol = solve_cover_lp(tours, inst.n)
    full = tours.index()[frozenset({1, 2, 3})]
    assert sol.x[full] == pytest.approx(1.0) and sol.objective == pytest.approx(2.0)


@given(instances(variants=("unsplittable",), ks=(3, 4, 5, 6), n_max=8))
def test_cover_lp_feasible_and_below_optimum(inst):
    tours = enumerate_tours(inst)
    sol = solve_cover_lp(tours, inst.n)
    cover = np.zeros(inst.n + 1)
    for x, mem in zip(sol.x, tours.members):
        for v in mem:
            cover[v] += x
    assert np.all(cover[1:] >= 1 - 1e-7)
    assert sol.objective <= exact_cvrp(inst).optimum + 1e-6


def test_gamma_select_values():
    assert gamma_select(3) == pytest.approx(math.log(1.5))
    assert l_even(10) == pytest.approx(1.943, abs=1e-3)
    assert gamma_select(10) == pytest.approx(math.log(1.5))
    assert all(gamma_select(k) >= 0 for k in range(3, 101))
