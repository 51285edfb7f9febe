from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given

from kcvrp.instance import (InfeasibleItinerary, InstanceError, Itinerary, Tour, check_itinerary,
                            expand_unit, gen_random, lift_itinerary, make_instance,
                            pad_depot_customers, pad_to_multiple, parse_instance,
                            serialize_instance, unit_copies)
from kcvrp.oracle import exact_cvrp

from conftest import instances, unit_metric


def test_parse_minimal_instance():
    inst = parse_instance("CVRP k 3 variant unit n 1\ndemands 1\nmatrix\n0 1\n1 0\n")
    assert inst.n == 1 and inst.k == 3
    assert inst.weights[0, 1] == 1.0


def test_parse_rejects_demand_at_capacity():
    text = "CVRP k 3 variant unsplittable n 1\ndemands 3\nmatrix\n0 1\n1 0\n"
    with pytest.raises(InstanceError, match="capacity"):
        parse_instance(text)


def test_parse_coords_gives_planar_distance():
    inst = parse_instance("CVRP k 3 variant unit n 1\ndemands 1\ncoords\n0 0\n3 4\n")
    assert inst.weights[0, 1] == 5.0


@pytest.mark.parametrize("text", [
    "",
    "CVRP k x variant unit n 1\ndemands 1\nmatrix\n0 1\n1 0\n",
    "CVRP k 3 variant odd n 1\ndemands 1\nmatrix\n0 1\n1 0\n",
    "CVRP k 3 variant unit n 1\ndemands 1 1\nmatrix\n0 1\n1 0\n",
    "CVRP k 3 variant unit n 1\ndemands 1\nmatrix\n0 1\n2 0\n",
    "CVRP k 3 variant unit n 2\ndemands 1 1\nmatrix\n0 1 5\n1 0 1\n5 1 0\n",
    "CVRP k 3 variant unit n 1\ndemands 2\nmatrix\n0 1\n1 0\n",
])
def test_parse_rejects_malformed(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_triangle_check_can_be_disabled():
    text = "CVRP k 3 variant unit n 2\ndemands 1 1\nmatrix\n0 1 5\n1 0 1\n5 1 0\n"
    assert parse_instance(text, check_triangle=False).n == 2


def test_expand_unit_replicates():
    w = np.array([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]])
    inst = make_instance(3, "splittable", [2, 1], w)
    unit = expand_unit(inst)
    assert unit.n == 3 and unit.demands == (1, 1, 1)
    assert unit.weights[1, 2] == 0.0
    assert unit.weights[0, 3] == 2.0
    assert [unit.root_customer(v) for v in unit.customers] == [1, 1, 2]
    assert expand_unit(make_instance(3, "splittable", [3], unit_metric(2))).n == 3


def test_expand_keeps_optimum_two_customers():
    w = np.array([[0, 1, 1.2], [1, 0, 0.5], [1.2, 0.5, 0]])
    inst = make_instance(3, "splittable", [2, 2], w)
    base = exact_cvrp(inst).optimum
    assert exact_cvrp(expand_unit(inst)).optimum == pytest.approx(base)
    # two trivial tours (4.4) beat any split layout (at least 4.7)
    assert base == pytest.approx(4.4)


def test_pad_zero_is_identity(unit_instance):
    inst = unit_instance(4, 3)
    assert pad_depot_customers(inst, 0) is inst


def test_pad_keeps_optimum():
    inst = gen_random(2, 3, "unit", seed=3)
    padded = pad_depot_customers(inst, 1)
    assert padded.n == 3
    assert exact_cvrp(padded).optimum == pytest.approx(exact_cvrp(inst).optimum)


def test_pad_to_multiple():
    inst = gen_random(5, 3, "unit", seed=1)
    assert pad_to_multiple(inst, 3).n == 6
    assert pad_to_multiple(inst, 4, 4).n == 8
    assert pad_to_multiple(inst, 5, 5).n == 5


def test_lift_drops_depot_copies_without_weight_increase():
    inst = gen_random(2, 3, "unit", seed=3)
    padded = pad_depot_customers(inst, 1)
    it = Itinerary.build([Tour.of([1, 3, 2], inst=padded)], padded)
    lifted = lift_itinerary(it, padded, inst)
    assert lifted.tours[0].customers == (1, 2)
    assert lifted.total_weight <= it.total_weight + 1e-12
    # a depot copy at the end of a route costs nothing extra
    tail = Itinerary.build([Tour.of([1, 2, 3], inst=padded)], padded)
    assert lift_itinerary(tail, padded, inst).total_weight == pytest.approx(tail.total_weight)


def test_gen_is_deterministic():
    a = gen_random(5, 3, "unit", "euclidean", 7)
    b = gen_random(5, 3, "unit", "euclidean", 7)
    assert a == b and serialize_instance(a) == serialize_instance(b)


def test_gen_closure_is_metric():
    inst = gen_random(8, 3, "unit", "random-shortest-path-closure", 4)
    w = inst.weights
    for t in range(inst.n + 1):
        assert np.all(w <= w[:, [t]] + w[[t], :] + 1e-9)


def test_gen_unsplittable_demands_below_capacity():
    for seed in range(20):
        inst = gen_random(6, 4, "unsplittable", seed=seed)
        assert set(inst.demands) <= {1, 2, 3}


def test_unit_copies_keeps_immediate_customers():
    inst = make_instance(4, "unsplittable", [2, 1], unit_metric(3))
    unit, copy_of = unit_copies(inst)
    assert unit.n == 3 and copy_of == [0, 1, 1, 2]


def test_check_itinerary_catches_violations():
    inst = make_instance(3, "unsplittable", [2, 2], unit_metric(3))
    good = Itinerary.build([Tour.of([1], inst=inst), Tour.of([2], inst=inst)], inst)
    check_itinerary(inst, good)
    with pytest.raises(InfeasibleItinerary, match="carries"):
        check_itinerary(inst, Itinerary.build([Tour.of([1, 2], inst=inst)], inst))
    with pytest.raises(InfeasibleItinerary, match="receives"):
        check_itinerary(inst, Itinerary.build([Tour.of([1], inst=inst)], inst))
    split = Itinerary.build([Tour((1,), {1: 1}), Tour((1, 2), {1: 1, 2: 2})], inst)
    with pytest.raises(InfeasibleItinerary):
        check_itinerary(inst, split)
    check_itinerary(inst, Itinerary.build([Tour.of([1], inst=inst)], inst), customers=[1])
    with pytest.raises(InfeasibleItinerary, match="not requested"):
        check_itinerary(inst, good, customers=[1])


@given(instances(variants=("unit", "splittable", "unsplittable"), n_max=9))
def test_serialize_round_trip(inst):
    assert parse_instance(serialize_instance(inst)) == inst


@given(instances(variants=("splittable",), n_max=4, max_demand=3))
def test_expand_solve_lift_is_feasible(inst):
    res = exact_cvrp(inst)
    check_itinerary(inst, res.itinerary)
    assert res.itinerary.total_weight <= res.optimum + 1e-9
