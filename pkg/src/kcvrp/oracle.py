"""Exact brute-force solvers for tiny instances.

These are the ground truth for tests; they share no code with the solvers
beyond the exact TSP routine.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .instance import Instance, Itinerary, Tour, expand_unit, lift_itinerary
from .tsp import cycle_weight, tsp_exact


def oracle_nmax(default: int = 12) -> int:
    return int(os.environ.get("CVRP_ORACLE_NMAX", default))


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimum: float
    itinerary: Itinerary
    states: int


def _best_tour(w: np.ndarray, customers: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
    cyc = tsp_exact((0,) + customers, w)
    order = list(cyc.order)
    i = order.index(0)
    order = order[i + 1:] + order[:i]
    return cyc.weight, tuple(order)


def exact_cvrp(inst: Instance, nmax: int | None = None) -> OracleResult:
    """Optimal itinerary by exact set partition over capacity-feasible tours."""
    limit = oracle_nmax() if nmax is None else nmax
    base = inst
    if inst.variant == "splittable":
        inst = expand_unit(inst)
    n, k = inst.n, inst.k
    if n > limit:
        raise OracleTooLarge(f"{n} customers exceed the oracle limit {limit}")
    w = inst.weights
    dem = inst.demands
    # tours grouped by their lowest customer (bit index)
    by_low: list[list[tuple[int, float, tuple[int, ...]]]] = [[] for _ in range(n)]
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            if sum(dem[v] for v in combo) > k:
                continue
            cost, order = _best_tour(w, tuple(v + 1 for v in combo))
            mask = sum(1 << v for v in combo)
            by_low[combo[0]].append((mask, cost, order))
    full = (1 << n) - 1
    best = [math.inf] * (full + 1)
    choice = [None] * (full + 1)
    best[0] = 0.0
    states = 0
    for s in range(1, full + 1):
        low = (s & -s).bit_length() - 1
        for mask, cost, order in by_low[low]:
            if mask & s == mask:
                states += 1
                c = cost + best[s ^ mask]
                if c < best[s]:
                    best[s], choice[s] = c, (mask, order)
    tours = []
    s = full
    while s:
        mask, order = choice[s]
        tours.append(Tour(order, {v: dem[v - 1] for v in order}))
        s ^= mask
    it = Itinerary.build(tours, inst)
    if inst is not base:
        it = lift_itinerary(it, inst, base)
    return OracleResult(best[full], it, states)


def _subset_cycle_costs(vertices: list[int], w: np.ndarray, sizes=None) -> dict[int, float]:
    """Cheapest simple cycle through every subset of size >= 3 (bitmask over ``vertices``)."""
    m = len(vertices)
    d = [[float(w[a, b]) for b in vertices] for a in vertices]
    out = {}
    for size in range(3, m + 1):
        if sizes is not None and size not in sizes:
            continue
        for combo in itertools.combinations(range(m), size):
            first, rest = combo[0], combo[1:]
            best = math.inf
            # fix the first vertex and skip mirror images
            for perm in itertools.permutations(rest):
                if perm[0] > perm[-1]:
                    continue
                cost = d[first][perm[0]] + d[perm[-1]][first]
                for a, b in zip(perm, perm[1:]):
                    cost += d[a][b]
                if cost < best:
                    best = cost
            out[sum(1 << i for i in combo)] = best
    return out


def _partition_min(m: int, blocks: dict[int, float]) -> float:
    full = (1 << m) - 1
    best = {0: 0.0}

    def solve(s):
        if s in best:
            return best[s]
        low = s & -s
        val = math.inf
        for mask, cost in blocks.items():
            if mask & low and mask & s == mask:
                val = min(val, cost + solve(s ^ mask))
        best[s] = val
        return val

    return solve(full)


def exact_mod_k_cycle_packing(vertices: Iterable[int], w: np.ndarray, k: int) -> float:
    """Cheapest partition into simple cycles whose lengths are multiples of k.

    A block of k = 2 vertices would be a doubled edge, which counts as a cycle here.
    """
    verts = sorted(set(vertices))
    if len(verts) > 9:
        raise OracleTooLarge("mod-k packing oracle is limited to 9 vertices")
    if len(verts) % k:
        raise ValueError("vertex count must be divisible by k")
    costs = _subset_cycle_costs(verts, w, sizes=set(range(k, len(verts) + 1, k)))
    if k == 2:
        for i, j in itertools.combinations(range(len(verts)), 2):
            costs[(1 << i) | (1 << j)] = 2 * float(w[verts[i], verts[j]])
    blocks = {mask: c for mask, c in costs.items() if bin(mask).count("1") % k == 0}
    return _partition_min(len(verts), blocks)


def exact_2factor(vertices: Iterable[int], w: np.ndarray) -> float:
    verts = sorted(set(vertices))
    if len(verts) > 9:
        raise OracleTooLarge("2-factor oracle is limited to 9 vertices")
    if len(verts) < 3:
        raise ValueError("a 2-factor needs at least 3 vertices")
    return _partition_min(len(verts), _subset_cycle_costs(verts, w))


def exact_4cycle_packing(vertices: Iterable[int], w: np.ndarray) -> float:
    verts = sorted(set(vertices))
    if len(verts) > 8:
        raise OracleTooLarge("4-cycle packing oracle is limited to 8 vertices")
    if len(verts) % 4:
        raise ValueError("vertex count must be divisible by 4")
    blocks = _subset_cycle_costs(verts, w, sizes={4})
    return _partition_min(len(verts), blocks)


def brute_force_matching(vertices: Iterable[int], w: np.ndarray, forbidden=()) -> float:
    """Minimum perfect matching by listing every pairing."""
    verts = sorted(set(vertices))
    forb = {(min(a, b), max(a, b)) for a, b in forbidden}

    def pairings(rest):
        if not rest:
            yield []
            return
        a = rest[0]
        for i in range(1, len(rest)):
            b = rest[i]
            if (a, b) in forb:
                continue
            for tail in pairings(rest[1:i] + rest[i + 1:]):
                yield [(a, b)] + tail

    best = math.inf
    for p in pairings(verts):
        best = min(best, sum(float(w[a, b]) for a, b in p))
    return best


def brute_force_tsp(vertices: Iterable[int], w: np.ndarray) -> float:
    verts = sorted(set(vertices))
    if len(verts) <= 3:
        return cycle_weight(w, verts)
    first, rest = verts[0], verts[1:]
    return min(cycle_weight(w, (first,) + p) for p in itertools.permutations(rest))
