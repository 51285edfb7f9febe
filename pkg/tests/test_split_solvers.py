from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcvrp.bounds import ratio_split_final, ratio_split_tradeoff
from kcvrp.instance import check_itinerary, expand_unit, gen_random, make_instance
from kcvrp.oracle import exact_4cycle_packing, exact_cvrp
from kcvrp.packing import min_cycle_packing, mod_k_cycle_packing
from kcvrp.split_solvers import (ag_itp, ex_itp, hcs, hr_itp, packing_factor, portfolio_split,
                                 split3, split4_matching, split4_mod2, split_final,
                                 split_tradeoff)
from kcvrp.tsp import christofides

from conftest import instances, unit_metric

TOL = 1e-9


def colocated(n, k, depot_dist=1.0):
    w = np.zeros((n + 1, n + 1))
    w[0, 1:] = w[1:, 0] = depot_dist
    return make_instance(k, "unit", [1] * n, w)


def assert_certified(inst, rep):
    check_itinerary(inst, rep.itinerary)
    assert rep.weight <= rep.certified_bound + TOL * max(1, inst.weights.max())


def test_ag_itp_unit_metric():
    inst = make_instance(3, "unit", [1] * 6, unit_metric(7))
    rep = ag_itp(inst, list(range(7)))
    assert rep.weight == 8
    assert rep.certified_bound == pytest.approx((2 / 3) * 6 + (2 / 3) * 7)


def test_ag_itp_trivial_sizes():
    inst = gen_random(1, 3, "unit", seed=2)
    assert ag_itp(inst, [0, 1]).weight == pytest.approx(2 * inst.weights[0, 1])
    inst = gen_random(3, 3, "unit", seed=2)
    h = hcs(inst)
    rep = ag_itp(inst, h)
    assert len(rep.itinerary) == 1 and rep.weight <= h.weight + TOL
    with pytest.raises(ValueError):
        ag_itp(inst, [1, 2, 3])


def test_hr_itp_four_cycle():
    inst = make_instance(3, "unit", [1] * 4, unit_metric(5))
    rep = hr_itp(inst, [1, 2, 3, 4])
    assert len(rep.itinerary) == 2
    assert rep.certified_bound == pytest.approx(1.0 * 4 + 0.5 * 4)
    assert rep.weight <= rep.certified_bound
    with pytest.raises(ValueError):
        hr_itp(inst, [0, 1, 2])


def test_hr_itp_single_tour_when_cycle_fits():
    inst = gen_random(3, 3, "unit", seed=5)
    rep = hr_itp(inst, [1, 2, 3])
    assert len(rep.itinerary) == 1


def test_ex_itp_single_triangle():
    inst = make_instance(3, "unit", [1] * 3, unit_metric(4))
    rep = ex_itp(inst, [[1, 2, 3]])
    assert rep.weight == 4 and rep.certified_bound == pytest.approx(4)


def test_ex_itp_rejects_bad_packings():
    inst = make_instance(3, "unit", [1] * 3, unit_metric(4))
    with pytest.raises(ValueError):
        ex_itp(inst, [[1, 2]])
    with pytest.raises(ValueError):
        ex_itp(inst, [[0, 1], [0, 2, 3]])


@given(instances(variants=("unit", "splittable"), ks=(3, 4, 5, 6), n_max=8))
def test_ex_itp_on_hamiltonian_cycle_equals_ag_itp(inst):
    h = hcs(inst)
    assert ex_itp(inst, [h.order]).itinerary == ag_itp(inst, h).itinerary


@given(instances(variants=("unit", "splittable"), ks=(3, 4, 5, 6), n_max=9))
def test_itp_bounds_hold(inst):
    assert_certified(inst, ag_itp(inst, hcs(inst)))
    if inst.n >= 2:
        assert_certified(inst, hr_itp(inst, christofides(inst.customers, inst.weights).order))
    if inst.n >= 3:
        assert_certified(inst, ex_itp(inst, min_cycle_packing(inst.customers, inst.weights)))


@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 4, 5]), st.integers(1, 3))
def test_ex_itp_mod_k_bound_is_ag_form(seed, k, groups):
    inst = gen_random(k * groups, k, "unit", seed=seed)
    packing = mod_k_cycle_packing(inst.customers, inst.weights, k)
    rep = ex_itp(inst, packing)
    assert packing_factor(inst, packing.cycles, k) == pytest.approx(1 / k)
    assert rep.certified_bound == pytest.approx((2 / k) * inst.delta + (1 - 1 / k) * packing.weight)
    assert_certified(inst, rep)


def test_split3_examples():
    inst = colocated(3, 3)
    rep = split3(inst)
    assert rep.weight == 2 and rep.certified_bound == pytest.approx(3)
    inst = make_instance(3, "unit", [1] * 3, unit_metric(4))
    rep = split3(inst)
    assert rep.weight == 4 and rep.certified_bound == pytest.approx(4.5)


def test_split4_examples():
    inst = gen_random(4, 4, "unit", seed=8)
    assert len(split4_mod2(inst).itinerary) == 1
    assert len(split4_matching(inst).itinerary) == 1
    assert split4_matching(inst).weight == pytest.approx(exact_cvrp(inst).optimum)


def test_mod2_factor_at_most_one_third():
    for size in range(6, 40, 2):
        assert -(-size // 4) / size <= 1 / 3 + 1e-15


@given(st.integers(0, 2**32 - 1))
def test_split4_matching_packing_bound(seed):
    inst = gen_random(8, 4, "unit", seed=seed)
    rep = split4_matching(inst)
    check_itinerary(inst, rep.itinerary)
    c4 = exact_4cycle_packing(inst.customers, inst.weights)
    assert rep.weight <= 0.5 * inst.delta + 0.75 * c4 + TOL


def test_wrong_capacity_or_variant_rejected():
    with pytest.raises(ValueError):
        split3(gen_random(3, 4, "unit"))
    with pytest.raises(ValueError):
        split4_mod2(gen_random(3, 4, "unsplittable"))
    with pytest.raises(ValueError):
        split_final(gen_random(3, 4, "unsplittable"))


def test_split_final_is_ag_itp_on_christofides():
    inst = gen_random(7, 4, "unit", seed=3)
    assert split_final(inst).itinerary == ag_itp(inst, hcs(inst)).itinerary


def test_tradeoff_unit_metric_two_k():
    inst = make_instance(3, "unit", [1] * 6, unit_metric(7))
    rep = split_tradeoff(inst)
    check_itinerary(inst, rep.itinerary)
    assert rep.weight == min(rep.details["branch_weights"].values())


SPECIAL = [(split3, 3, 1.5), (split4_matching, 4, 1.5), (split4_mod2, 4, 5 / 3)]


@pytest.mark.parametrize("solver,k,ratio", SPECIAL)
@given(inst=instances(variants=("unit", "splittable"), ks=(3, 4), n_max=8))
def test_special_solvers_within_ratio(solver, k, ratio, inst):
    if inst.k != k or expand_unit(inst).n > 10:
        return
    rep = solver(inst)
    check_itinerary(inst, rep.itinerary)
    opt = exact_cvrp(inst).optimum
    assert opt - TOL <= rep.weight <= ratio * opt + TOL
    if rep.certified_bound is not None:
        assert rep.weight <= rep.certified_bound + TOL


@given(instances(variants=("unit", "splittable"), ks=(3, 4, 5, 6), n_max=7))
def test_general_solvers_within_ratio(inst):
    if expand_unit(inst).n > 10:
        return
    opt = exact_cvrp(inst).optimum
    trade = split_tradeoff(inst)
    final = split_final(inst)
    best = portfolio_split(inst)
    for rep in (trade, final, best):
        check_itinerary(inst, rep.itinerary)
    assert trade.weight <= ratio_split_tradeoff(1.5, inst.k).value * opt + TOL
    assert final.weight <= ratio_split_final(inst.k).value * opt + TOL
    assert best.weight <= min(trade.weight, final.weight) + TOL
