"""Splittable and unit-demand solvers built on iterated tour partitioning."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .instance import (Instance, Itinerary, ceil_div, expand_unit, lift_itinerary,
                       pad_to_multiple)
from .packing import (CyclePacking, augmented_matching_tours, min_cycle_packing,
                      mod2_cycle_packing, mod_k_cycle_packing)
from .matching import min_perfect_matching
from .partition import cut, repair, segments_weight, to_tours
from .tsp import HamCycle, christofides, cycle_weight


@dataclass
class SolverReport:
    """Result of one solver run together with its per-run guarantee."""

    algorithm: str
    itinerary: Itinerary
    certified_bound: float | None
    inputs_digest: str = ""
    details: dict = field(default_factory=dict)

    @property
    def weight(self) -> float:
        return self.itinerary.total_weight


# ---------------------------------------------------------------- ITP core

def rotate_to_depot(order: Sequence[int]) -> list[int]:
    order = list(order)
    if 0 not in order:
        return order
    i = order.index(0)
    return order[i:] + order[:i]


def _check_repair(w, before, after, demand, tol):
    pre = segments_weight(w, before)
    post = segments_weight(w, after)
    if post > pre + tol:
        raise AssertionError(f"conflict repair increased weight: {pre} -> {post}")
    return pre, post


def partition_path(inst: Instance, path: Sequence[int], capacity: int,
                   unsplittable: bool = False) -> tuple[list, dict]:
    """Best of the ``capacity`` offset solutions on a depot path.

    Solution i puts i demand units in the first segment and ``capacity`` in
    every later one.  With ``unsplittable`` the cut customers are repaired
    clockwise.
    """
    w = inst.weights
    seq = [(v, inst.demand(v)) for v in path]
    total = sum(d for _, d in seq)
    if total == 0:
        return [], {"offset": 0, "pre_repair": 0.0}
    demand = dict(seq)
    best = None
    for i in range(1, capacity + 1):
        caps = [i] + [capacity] * ceil_div(max(total - i, 0), capacity)
        segs = cut(seq, caps)
        pre = segments_weight(w, segs)
        if unsplittable:
            fixed = repair(segs, demand, "cw")
            pre, post = _check_repair(w, segs, fixed, demand, inst.tol * len(segs))
            segs = fixed
        else:
            post = pre
        if best is None or post < best[0]:
            best = (post, i, segs, pre)
        if i >= total:
            break
    post, i, segs, pre = best
    return segs, {"offset": i, "pre_repair": pre}


def partition_cycle(inst: Instance, cycle: Sequence[int], caps: Sequence[int],
                    policy: Callable | None = None) -> tuple[list, dict]:
    """Best rotation of a depot-free cycle cut into segments of ``caps``.

    ``policy(segs)`` returns "cw" or "ccw" for the repair of unsplittable
    conflicts; ``None`` leaves cut customers split.
    """
    w = inst.weights
    seq = [(v, inst.demand(v)) for v in cycle]
    total = sum(d for _, d in seq)
    demand = dict(seq)
    best = None
    for s in range(total):
        segs = cut(seq, caps, s)
        pre = segments_weight(w, segs)
        if policy is not None:
            fixed = repair(segs, demand, policy(segs))
            pre, post = _check_repair(w, segs, fixed, demand, inst.tol * len(segs))
            segs = fixed
        else:
            post = pre
        if best is None or post < best[0]:
            best = (post, s, segs, pre)
    post, s, segs, pre = best
    return segs, {"rotation": s, "pre_repair": pre}


def _report(name, inst, segs, bound, **details):
    it = Itinerary.build(to_tours(segs), inst)
    return SolverReport(name, it, bound, inst.digest(), details)


def ag_itp(inst: Instance, h: HamCycle | Sequence[int], capacity: int | None = None) -> SolverReport:
    """Iterated tour partitioning of a Hamiltonian cycle through the depot."""
    cap = inst.k if capacity is None else capacity
    order = rotate_to_depot(h.order if isinstance(h, HamCycle) else h)
    if order[0] != 0:
        raise ValueError("the cycle must pass through the depot")
    path = order[1:]
    segs, info = partition_path(inst, path, cap)
    wh = cycle_weight(inst.weights, order)
    bound = (2 / cap) * inst.star(path) + (1 - 1 / cap) * wh
    return _report("ag-itp", inst, segs, bound, **info)


def hr_itp(inst: Instance, c: Sequence[int], capacity: int | None = None) -> SolverReport:
    """Iterated tour partitioning of a cycle that avoids the depot."""
    cap = inst.k if capacity is None else capacity
    c = list(c)
    if 0 in c:
        raise ValueError("the cycle must not pass through the depot")
    total = sum(inst.demand(v) for v in c)
    m = ceil_div(total, cap)
    segs, info = partition_cycle(inst, c, [cap] * m)
    bound = (2 * m / total) * inst.star(c) + (1 - m / total) * cycle_weight(inst.weights, c)
    return _report("hr-itp", inst, segs, bound, **info)


def packing_factor(inst: Instance, cycles, capacity: int) -> float:
    """The largest ceil(|C|/q)/|C| over depot-free cycles (1/q for a depot cycle)."""
    g = 0.0
    for cyc in cycles:
        if 0 in cyc:
            g = max(g, 1 / capacity)
            continue
        size = sum(inst.demand(v) for v in cyc)
        g = max(g, ceil_div(size, capacity) / size)
    return g


def ex_itp(inst: Instance, packing: CyclePacking | Sequence[Sequence[int]],
           capacity: int | None = None) -> SolverReport:
    """AG-style partitioning on the depot cycle and rotations on every other cycle."""
    cap = inst.k if capacity is None else capacity
    cycles = [list(c) for c in (packing.cycles if isinstance(packing, CyclePacking) else packing)]
    seen = [v for c in cycles for v in c if v != 0]
    if sorted(seen) != list(inst.customers):
        raise ValueError("the packing must cover every customer exactly once")
    if sum(0 in c for c in cycles) > 1:
        raise ValueError("the depot may sit on at most one cycle")
    segs = []
    for cyc in cycles:
        if 0 in cyc:
            part, _ = partition_path(inst, rotate_to_depot(cyc)[1:], cap)
        else:
            total = sum(inst.demand(v) for v in cyc)
            part, _ = partition_cycle(inst, cyc, [cap] * ceil_div(total, cap))
        segs.extend(part)
    g = packing_factor(inst, cycles, cap)
    wp = sum(cycle_weight(inst.weights, c) for c in cycles)
    bound = 2 * g * inst.delta + (1 - g) * wp
    return _report("ex-itp", inst, segs, bound, g=g, packing_weight=wp)


# ---------------------------------------------------------------- helpers

def _finish(name, base: Instance, work: Instance, rep: SolverReport, bound, **details) -> SolverReport:
    it = lift_itinerary(rep.itinerary, work, base)
    d = dict(rep.details)
    d.update(details)
    return SolverReport(name, it, bound, base.digest(), d)


def _require_k(inst: Instance, k: int, name: str):
    if inst.k != k:
        raise ValueError(f"{name} needs k={k}, got k={inst.k}")
    if inst.variant == "unsplittable":
        raise ValueError(f"{name} is for splittable or unit-demand instances")


def _unit_view(inst: Instance, multiple: int, minimum: int) -> Instance:
    return pad_to_multiple(expand_unit(inst), multiple, minimum)


def hcs(inst: Instance) -> HamCycle:
    """Christofides cycle on the depot plus all customers."""
    return christofides(range(inst.n + 1), inst.weights)


# ---------------------------------------------------------------- special k

def split3(inst: Instance) -> SolverReport:
    _require_k(inst, 3, "split3")
    work = _unit_view(inst, 1, 3)
    packing = min_cycle_packing(work.customers, work.weights)
    rep = ex_itp(work, packing)
    bound = work.delta + 0.5 * packing.weight
    return _finish("split3", inst, work, rep, bound, packing_weight=packing.weight)


def split4_mod2(inst: Instance) -> SolverReport:
    _require_k(inst, 4, "split4_mod2")
    work = _unit_view(inst, 2, 4)
    packing = mod2_cycle_packing(work.customers, work.weights)
    rep = ex_itp(work, packing)
    bound = (2 / 3) * work.delta + (2 / 3) * packing.weight
    return _finish("split4-mod2", inst, work, rep, bound, packing_weight=packing.weight)


def split4_matching(inst: Instance) -> SolverReport:
    """The 3/2 construction for capacity 4; its guarantee needs an exact 4-cycle packing,
    so no per-run bound is certified here."""
    _require_k(inst, 4, "split4_matching")
    work = _unit_view(inst, 4, 4)
    m_star = min_perfect_matching(work.customers, work.weights)
    it = augmented_matching_tours(work, m_star)
    rep = SolverReport("split4-matching", it, None, work.digest(),
                       {"matching_weight": m_star.weight, "delta": work.delta})
    return _finish("split4-matching", inst, work, rep, None)


# ---------------------------------------------------------------- general k

def split_tradeoff(inst: Instance, alpha_cycle: HamCycle | None = None) -> SolverReport:
    """Best of three runs: mod-k packing, the alpha-cycle, and the Christofides cycle."""
    if inst.variant == "unsplittable":
        raise ValueError("split_tradeoff is for splittable or unit-demand instances")
    k = inst.k
    work = _unit_view(inst, k, k)
    packing = mod_k_cycle_packing(work.customers, work.weights, k)
    runs = []
    rep = ex_itp(work, packing)
    runs.append(_finish("packing", inst, work, rep, rep.certified_bound,
                        packing_weight=packing.weight))
    h = hcs(inst)
    alpha = h if alpha_cycle is None else alpha_cycle
    runs.append(_relabel(ag_itp(inst, alpha), "alpha-cycle"))
    runs.append(_relabel(ag_itp(inst, h), "christofides"))
    best = min(runs, key=lambda r: r.weight)  # min keeps the first of equal weights
    details = {"branch": best.algorithm,
               "branch_bounds": {r.algorithm: r.certified_bound for r in runs},
               "branch_weights": {r.algorithm: r.weight for r in runs}}
    return SolverReport("split-tradeoff", best.itinerary, best.certified_bound,
                        inst.digest(), details)


def _relabel(rep: SolverReport, name: str) -> SolverReport:
    return SolverReport(name, rep.itinerary, rep.certified_bound, rep.inputs_digest, rep.details)


def split_final(inst: Instance) -> SolverReport:
    if inst.variant == "unsplittable":
        raise ValueError("split_final is for splittable or unit-demand instances")
    rep = ag_itp(inst, hcs(inst))
    return _relabel(rep, "split-final")


def portfolio_split(inst: Instance, alpha_cycle: HamCycle | None = None) -> SolverReport:
    runs = [split_tradeoff(inst, alpha_cycle), split_final(inst)]
    if inst.k == 3:
        runs.append(split3(inst))
    if inst.k == 4:
        runs.append(split4_matching(inst))
        runs.append(split4_mod2(inst))
    best = min(runs, key=lambda r: r.weight)
    details = {"branch": best.algorithm, "branch_weights": {r.algorithm: r.weight for r in runs}}
    return SolverReport("portfolio-split", best.itinerary, best.certified_bound,
                        inst.digest(), details)
