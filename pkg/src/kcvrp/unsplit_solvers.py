"""Unsplittable solvers: half-capacity partitioning with conflict repair,
local tour rules, the capacity 3/4/5 type-dispatch algorithms, and LP rounding."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .instance import (Instance, Itinerary, Tour, ceil_div, lift_itinerary, pad_to_multiple,
                       route_weight)
from .lp import EnumerationLimit, TourSet, enumerate_tours, gamma_select, solve_cover_lp
from .packing import (CyclePacking, collapse_cycles, min_cycle_packing, mod2_cycle_packing,
                      mod_k_cycle_packing)
from .partition import boundary_split, seg_loads, to_tours
from .split_solvers import (SolverReport, hcs, packing_factor, partition_cycle,
                            partition_path, rotate_to_depot)
from .tsp import HamCycle, cycle_weight, shortcut_order


@dataclass(frozen=True)
class CustomerClass:
    id: int
    demand: int
    is_big: bool


def classify(inst: Instance) -> list[CustomerClass]:
    half = inst.k // 2
    return [CustomerClass(v, inst.demand(v), inst.demand(v) > half) for v in inst.customers]


def half_capacity(k: int) -> int:
    """Segment capacity ceil(k/2)+1 used by the unsplittable partitioning."""
    return ceil_div(k, 2) + 1


def _unsplittable_check(inst: Instance):
    if inst.variant == "splittable":
        raise ValueError("expected an unsplittable or unit-demand instance")
    if any(d >= inst.k for d in inst.demands) and inst.variant == "unsplittable":
        raise ValueError("every demand must be below the capacity")


def _assert_loads(segs, k):
    loads = seg_loads(segs)
    if loads and max(loads) > k:
        raise AssertionError(f"repaired tour carries {max(loads)} > {k}")


def _trivial(inst: Instance, v: int) -> list:
    return [[v, inst.demand(v)]]


# ---------------------------------------------------------------- refined AG-UITP

def _refined_segments(inst: Instance, order: Sequence[int], customers) -> tuple[list, dict]:
    k = inst.k
    keep = set(customers)
    path = [v for v in rotate_to_depot(order) if v in keep]
    big = [v for v in path if inst.demand(v) > k // 2]
    small = [v for v in path if inst.demand(v) <= k // 2]
    segs = [_trivial(inst, v) for v in big]
    part, info = partition_path(inst, small, half_capacity(k), unsplittable=True)
    _assert_loads(part, k)
    return segs + part, info


def refined_ag_uitp(inst: Instance, h: HamCycle | Sequence[int], customers=None) -> SolverReport:
    """Trivial tours for big customers, half-capacity partitioning of the rest along h.

    With ``customers`` given, h is first shortcut to them and only they are served.
    """
    _unsplittable_check(inst)
    order = list(h.order if isinstance(h, HamCycle) else h)
    if 0 not in order:
        raise ValueError("the cycle must pass through the depot")
    served = list(inst.customers) if customers is None else sorted(customers)
    segs, info = _refined_segments(inst, order, served)
    cyc = shortcut_order(order, set(served) | {0})
    r = inst.k // 2 + 1
    bound = (2 / r) * inst.star(served) + (1 - 1 / r) * cycle_weight(inst.weights, cyc)
    it = Itinerary.build(to_tours(segs), inst)
    return SolverReport("refined-uitp", it, bound, inst.digest(), info)


# ---------------------------------------------------------------- EX-UITP

def _cw(_segs):
    return "cw"


def _ex_uitp_segments(inst: Instance, cycles) -> list:
    q = half_capacity(inst.k)
    segs = []
    for cyc in cycles:
        if 0 in cyc:
            part, _ = partition_path(inst, rotate_to_depot(cyc)[1:], q, unsplittable=True)
        else:
            total = sum(inst.demand(v) for v in cyc)
            part, _ = partition_cycle(inst, cyc, [q] * ceil_div(total, q), _cw)
        _assert_loads(part, inst.k)
        segs.extend(part)
    return segs


def ex_uitp(inst: Instance, packing: CyclePacking | Sequence[Sequence[int]]) -> SolverReport:
    """Half-capacity partitioning of every cycle of a packing of small customers."""
    _unsplittable_check(inst)
    cycles = [list(c) for c in (packing.cycles if isinstance(packing, CyclePacking) else packing)]
    members = [v for c in cycles for v in c if v]
    if any(inst.demand(v) > inst.k // 2 for v in members):
        raise ValueError("ex_uitp accepts small customers only")
    segs = _ex_uitp_segments(inst, cycles)
    g = packing_factor(inst, cycles, half_capacity(inst.k))
    wp = sum(cycle_weight(inst.weights, c) for c in cycles)
    bound = 2 * g * inst.star(members) + (1 - g) * wp
    it = Itinerary.build(to_tours(segs), inst)
    return SolverReport("ex-uitp", it, bound, inst.digest(), {"g": g, "packing_weight": wp})


# ---------------------------------------------------------------- local rules

def _rule2_direction(segs) -> str:
    m = len(segs)
    left = m > 1 and boundary_split(segs, m - 1, 0) is not None
    right = m > 1 and boundary_split(segs, 0, 1) is not None
    # only a conflict between the last tour and the first one is repaired backwards
    return "ccw" if left and not right else "cw"


def _rule3_policy(big: int):
    def direction(segs) -> str:
        m = len(segs)
        for a in range(m):
            b = (a + 1) % m
            if a == b:
                continue
            split = boundary_split(segs, a, b)
            if split and split[0] == big:
                _, x1, x2 = split
                return "cw" if x1 <= x2 else "ccw"
        return "cw"
    return direction


def local_tour_count(total: int, k: int, rule: str) -> int:
    q = half_capacity(k)
    if rule == "single":
        return 1
    if rule == "no_big":
        return ceil_div(total - 1, q)
    if rule == "one_big":
        return ceil_div(total, q)
    raise ValueError(f"unknown rule {rule!r}")


def build_local_tours(inst: Instance, cycle: Sequence[int], rule: str) -> tuple[list[Tour], float]:
    """Tours for one demand-weighted cycle by rule "single", "no_big" or "one_big".

    Returns the tours and the certified bound 2g*Delta_C + (1-g)*w(C) with
    g = (number of tours)/(total demand).
    """
    k = inst.k
    cycle = list(cycle)
    total = sum(inst.demand(v) for v in cycle)
    half = k // 2
    bigs = [v for v in cycle if inst.demand(v) > half]
    q = half_capacity(k)
    if rule == "single":
        if total > k:
            raise ValueError("rule 'single' needs total demand <= k")
        segs, _ = partition_cycle(inst, cycle, [total])
    elif rule == "no_big":
        if total <= k or k < 4 or bigs:
            raise ValueError("rule 'no_big' needs total > k >= 4 and no big customer")
        m = local_tour_count(total, k, rule)
        segs, _ = partition_cycle(inst, cycle, [q + 1] + [q] * (m - 1), _rule2_direction)
    elif rule == "one_big":
        if total <= k or k < 4 or len(bigs) != 1 or inst.demand(bigs[0]) != half + 1:
            raise ValueError("rule 'one_big' needs total > k >= 4 and one big customer of demand floor(k/2)+1")
        m = local_tour_count(total, k, rule)
        segs, _ = partition_cycle(inst, cycle, [q] * m, _rule3_policy(bigs[0]))
    else:
        raise ValueError(f"unknown rule {rule!r}")
    _assert_loads(segs, k)
    g = local_tour_count(total, k, rule) / total
    bound = 2 * g * inst.star(cycle) + (1 - g) * cycle_weight(inst.weights, cycle)
    return to_tours(segs), bound


def _rule_segments(inst: Instance, cycle: Sequence[int], rule: str) -> list:
    tours, _ = build_local_tours(inst, cycle, rule)
    return [[[v, t.deliver[v]] for v in t.customers] for t in tours]


def best_partition_segments(inst: Instance, customers: Sequence[int]) -> list:
    """Cheapest split of a handful of customers into capacity-feasible tours."""
    custs = list(customers)
    w = inst.weights
    best_cost, best = math.inf, None
    for labels in _set_partitions(len(custs)):
        blocks = [[custs[i] for i in range(len(custs)) if labels[i] == b] for b in range(max(labels) + 1)]
        if any(sum(inst.demand(v) for v in blk) > inst.k for blk in blocks):
            continue
        cost, routes = 0.0, []
        for blk in blocks:
            c, r = min(((route_weight(w, p), p) for p in itertools.permutations(blk)),
                       key=lambda t: t[0])
            cost += c
            routes.append(r)
        if cost < best_cost:
            best_cost, best = cost, routes
    return [[[v, inst.demand(v)] for v in r] for r in best]


def _set_partitions(m: int):
    """Restricted growth strings of length m."""
    def grow(prefix, top):
        if len(prefix) == m:
            yield list(prefix)
            return
        for b in range(top + 2):
            yield from grow(prefix + [b], max(top, b))
    if m == 0:
        yield []
    else:
        yield from grow([0], 0)


# ---------------------------------------------------------------- type dispatch

class TypeTable:
    """Per-cycle handlers keyed by x, the demand of the small customers on the cycle."""

    def __init__(self, name: str, rows: list[tuple[str, Callable[[int], bool], Callable]],
                 check_upto: int):
        self.name = name
        self.rows = rows
        for x in range(check_upto + 1):
            hits = [label for label, pred, _ in rows if pred(x)]
            if len(hits) != 1:
                raise AssertionError(f"{name}: x={x} matches {hits or 'no type'}")

    def dispatch(self, x: int):
        for label, pred, handler in self.rows:
            if pred(x):
                return label, handler
        raise AssertionError(f"{self.name}: unhandled x={x}")


def _split_cycle(inst: Instance, cycle):
    small = [v for v in cycle if inst.demand(v) <= inst.k // 2]
    big = [v for v in cycle if inst.demand(v) > inst.k // 2]
    return small, big


def _with_anchors(inst, cycle, anchors_count, demand_filter, build):
    """Try every choice of anchor big customers kept on the small cycle; others get trivial tours."""
    small, big = _split_cycle(inst, cycle)
    pool = [v for v in big if demand_filter(inst.demand(v))]
    best_cost, best = math.inf, None
    for anchors in itertools.combinations(pool, anchors_count):
        keep = set(small) | set(anchors)
        sub = [v for v in cycle if v in keep]
        segs = build(sub, anchors) + [_trivial(inst, v) for v in big if v not in anchors]
        cost = sum(route_weight(inst.weights, [c for c, _ in s]) for s in segs)
        if cost < best_cost:
            best_cost, best = cost, segs
    if best is None:
        raise AssertionError("no anchor customer available")
    return best


def _bigs_trivial_then(inst, cycle, build):
    small, big = _split_cycle(inst, cycle)
    sub = [v for v in cycle if v in set(small)]
    return [_trivial(inst, v) for v in big] + (build(sub) if sub else [])


def _k4_table(inst: Instance) -> TypeTable:
    exu = lambda sub: _ex_uitp_segments(inst, [sub])
    rule = lambda r: (lambda sub, *_: _rule_segments(inst, sub, r))
    return TypeTable("k=4", [
        ("type 0", lambda x: x == 0, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 1", lambda x: x % 3 == 0 and x >= 3, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 2", lambda x: x % 3 == 1 and x >= 16, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 3", lambda x: x % 3 == 2 and x >= 8, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 4", lambda x: x == 1, lambda c: _with_anchors(inst, c, 1, lambda d: d == 3, rule("single"))),
        ("type 5", lambda x: x == 4, lambda c: _bigs_trivial_then(inst, c, rule("single"))),
        ("type 6", lambda x: x == 7, lambda c: _bigs_trivial_then(inst, c, rule("no_big"))),
        ("type 7", lambda x: x == 10, lambda c: _bigs_trivial_then(inst, c, rule("no_big"))),
        ("type 8", lambda x: x == 5, lambda c: _with_anchors(inst, c, 1, lambda d: d == 3, rule("one_big"))),
        ("type 9", lambda x: x == 13, lambda c: _with_anchors(inst, c, 1, lambda d: d == 3, rule("one_big"))),
        ("type 10", lambda x: x == 2, lambda c: _with_anchors(
            inst, c, 2, lambda d: d == 3, lambda sub, _a: best_partition_segments(inst, sub))),
    ], check_upto=200)


def _k5_type3(inst, cycle):
    def build(sub, anchors):
        if inst.demand(anchors[0]) == 3:
            return _rule_segments(inst, sub, "single")
        return best_partition_segments(inst, sub)
    return _with_anchors(inst, cycle, 1, lambda d: d in (3, 4), build)


def _k5_table(inst: Instance) -> TypeTable:
    exu = lambda sub: _ex_uitp_segments(inst, [sub])
    single = lambda sub, *_: _rule_segments(inst, sub, "single")
    return TypeTable("k=5", [
        ("type 0", lambda x: x == 0, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 1", lambda x: x >= 6, lambda c: _bigs_trivial_then(inst, c, exu)),
        ("type 2", lambda x: x == 1, lambda c: _with_anchors(inst, c, 1, lambda d: d in (3, 4), single)),
        ("type 3", lambda x: x == 2, lambda c: _k5_type3(inst, c)),
        ("type 4", lambda x: 3 <= x <= 5, lambda c: _bigs_trivial_then(inst, c, single)),
    ], check_upto=200)


def _dispatch_cycles(inst: Instance, cycles, table: TypeTable):
    segs, types = [], []
    for cyc in cycles:
        small, _ = _split_cycle(inst, cyc)
        x = sum(inst.demand(v) for v in small)
        label, handler = table.dispatch(x)
        part = handler(cyc)
        _assert_loads(part, inst.k)
        segs.extend(part)
        types.append(label)
    return segs, types


def _unit_packing_cycles(work: Instance, build) -> tuple[list[list[int]], float]:
    """Build a packing on unit copies of ``work`` and shortcut it to ``work``'s customers."""
    copy_of = [0] + [v for v in work.customers for _ in range(work.demand(v))]
    idx = np.asarray(copy_of)
    w_units = work.weights[np.ix_(idx, idx)]
    packings = build(list(range(1, len(copy_of))), w_units)
    best = None
    for packing in packings:
        cycles = collapse_cycles(packing.cycles, copy_of)
        weight = sum(cycle_weight(work.weights, c) for c in cycles)
        if best is None or weight < best[1]:
            best = (cycles, weight)
    return best


def _unsplit_report(name, base, work, segs, bound, **details):
    it = Itinerary.build(to_tours(segs), work)
    it = lift_itinerary(it, work, base)
    return SolverReport(name, it, bound, base.digest(), details)


def _require(inst: Instance, k: int, name: str):
    if inst.k != k:
        raise ValueError(f"{name} needs k={k}, got k={inst.k}")
    _unsplittable_check(inst)


# ---------------------------------------------------------------- capacity 3, 4, 5

def unsplit3(inst: Instance) -> SolverReport:
    _require(inst, 3, "unsplit3")
    work = pad_to_multiple(inst, 1, 3)
    cycles, wc = _unit_packing_cycles(work, lambda vs, w: [min_cycle_packing(vs, w)])
    segs, residual = [], []
    for cyc in cycles:
        ones = [v for v in cyc if work.demand(v) == 1]
        twos = [v for v in cyc if work.demand(v) == 2]
        if len(ones) == 1:
            u = ones[0]
            # any partner keeps the bound; take the cheapest pair tour
            partner = min(twos, key=lambda v: (route_weight(work.weights, [u, v]), v))
            segs.append([[u, 1], [partner, 2]])
            segs.extend(_trivial(work, v) for v in twos if v != partner)
        else:
            segs.extend(_trivial(work, v) for v in twos)
            if ones:
                residual.append(ones)
    for cyc in residual:
        part, _ = partition_cycle(work, cyc, [3] * ceil_div(len(cyc), 3))
        segs.extend(part)
    bound = work.delta + 0.5 * wc
    return _unsplit_report("unsplit3", inst, work, segs, bound, packing_weight=wc)


def unsplit4(inst: Instance) -> SolverReport:
    _require(inst, 4, "unsplit4")
    work = pad_to_multiple(inst, 2, 4)
    cycles, wc = _unit_packing_cycles(work, lambda vs, w: [mod2_cycle_packing(vs, w)])
    segs, types = _dispatch_cycles(work, cycles, _k4_table(work))
    bound = 0.75 * work.delta + 0.625 * wc
    return _unsplit_report("unsplit4", inst, work, segs, bound, packing_weight=wc, types=types)


def unsplit5_packing_branch(inst: Instance) -> SolverReport:
    _require(inst, 5, "unsplit5")
    work = pad_to_multiple(inst, 5, 5)

    def build(vs, w):
        return [mod_k_cycle_packing(vs, w, 5, "double"), mod_k_cycle_packing(vs, w, 5, "matching")]

    cycles, wc = _unit_packing_cycles(work, build)
    segs, types = _dispatch_cycles(work, cycles, _k5_table(work))
    bound = (2 / 3) * work.delta + (2 / 3) * wc
    return _unsplit_report("unsplit5-packing", inst, work, segs, bound, packing_weight=wc, types=types)


def unsplit5(inst: Instance, gamma: float | None = None, seed: int = 0) -> SolverReport:
    """Lighter of the mod-5 packing construction and LP rounding on the Christofides cycle."""
    runs = [unsplit5_packing_branch(inst)]
    try:
        runs.append(lp_uitp(inst, hcs(inst), gamma_select(5) if gamma is None else gamma, seed))
    except EnumerationLimit:
        pass
    best = min(runs, key=lambda r: r.weight)
    return SolverReport("unsplit5", best.itinerary, best.certified_bound, inst.digest(),
                        {"branch": best.algorithm, "branch_weights": {r.algorithm: r.weight for r in runs}})


# ---------------------------------------------------------------- LP rounding

def round_tours(tours: TourSet, x: np.ndarray, gamma: float, seed: int) -> list[int]:
    """Indices of tours picked with probability min(1, gamma*x_T), one draw per tour."""
    rng = np.random.default_rng(seed)
    draws = rng.random(len(tours))
    prob = np.minimum(1.0, gamma * x)
    return [i for i in range(len(tours)) if draws[i] < prob[i]]


def lp_uitp(inst: Instance, h: HamCycle | Sequence[int], gamma: float, seed: int = 0,
            tours: TourSet | None = None) -> SolverReport:
    """Round the tour-cover LP, then serve whoever is left by refined partitioning on h."""
    _unsplittable_check(inst)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    tours = enumerate_tours(inst) if tours is None else tours
    lp = solve_cover_lp(tours, inst.n)
    picked = round_tours(tours, lp.x, gamma, seed)
    covered: set[int] = set()
    segs = []
    for i in picked:
        # a customer stays in the first picked tour that holds it
        route = [v for v in tours.orders[i] if v not in covered]
        covered.update(route)
        if route:
            segs.append([[v, inst.demand(v)] for v in route])
    w = inst.weights
    chosen = sum(route_weight(w, [c for c, _ in s]) for s in segs)
    residual = [v for v in inst.customers if v not in covered]
    rest = refined_ag_uitp(inst, h, residual)
    tours_out = list(to_tours(segs)) + list(rest.itinerary.tours)
    it = Itinerary.build(tours_out, inst)
    order = list(h.order if isinstance(h, HamCycle) else h)
    r = inst.k // 2 + 1
    expected = (gamma * lp.objective + math.exp(-gamma) * (2 / r) * inst.delta
                + (1 - 1 / r) * cycle_weight(w, order))
    details = {"gamma": gamma, "seed": seed, "lp_objective": lp.objective,
               "selected": len(picked), "expected_bound": expected}
    if not picked:
        # nothing rounded in: the run is exactly the refined partitioning
        return SolverReport("lp-uitp", rest.itinerary, rest.certified_bound, inst.digest(),
                            {**details, **rest.details})
    return SolverReport("lp-uitp", it, chosen + rest.certified_bound, inst.digest(), details)


def unsplit_portfolio(inst: Instance, alpha_cycle: HamCycle | None = None, seed: int = 0) -> SolverReport:
    _unsplittable_check(inst)
    k = inst.k
    h = hcs(inst)
    cycles = [h] if alpha_cycle is None or tuple(alpha_cycle.order) == h.order else [h, alpha_cycle]
    gammas = []
    for g in (gamma_select(k), 0.0, math.log(2)):
        if g not in gammas:
            gammas.append(g)
    runs = []
    try:
        tours = enumerate_tours(inst)
    except EnumerationLimit:
        tours = None
    for cyc in cycles:
        for g in gammas:
            if tours is None and g > 0:
                continue
            if tours is None:
                runs.append(refined_ag_uitp(inst, cyc))
            else:
                runs.append(lp_uitp(inst, cyc, g, seed, tours))
    special = {3: unsplit3, 4: unsplit4, 5: unsplit5}.get(k)
    if special is not None:
        runs.append(special(inst))
    best = min(runs, key=lambda r: r.weight)
    return SolverReport("portfolio-unsplit", best.itinerary, best.certified_bound, inst.digest(),
                        {"branch": best.algorithm, "branch_weights": [r.weight for r in runs]})
