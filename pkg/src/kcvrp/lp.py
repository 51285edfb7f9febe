"""Tour enumeration, the covering LP over tours, and the rounding parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .bounds import unsplit_final_branch
from .instance import Instance

ENUMERATION_LIMIT = 2_000_000


class EnumerationLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class TourSet:
    members: tuple[tuple[int, ...], ...]   # customer subsets, in enumeration order
    orders: tuple[tuple[int, ...], ...]    # optimal visiting order of each subset
    weights: np.ndarray

    def __len__(self):
        return len(self.members)

    def index(self) -> dict[frozenset, int]:
        return {frozenset(m): i for i, m in enumerate(self.members)}


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective: float


def _feasible_subsets(demands: list[int], k: int, limit: int) -> list[tuple[int, ...]]:
    """All nonempty customer subsets with demand at most k, by size then lexicographically."""
    n = len(demands)
    layers = [[((), 0)]]
    out = []
    size = 0
    while layers[-1]:
        nxt = []
        for subset, load in layers[-1]:
            start = subset[-1] + 1 if subset else 0
            for v in range(start, n):
                if load + demands[v] <= k:
                    nxt.append((subset + (v,), load + demands[v]))
                    if len(out) + len(nxt) > limit:
                        raise EnumerationLimit(f"more than {limit} feasible tours")
        out.extend(s for s, _ in nxt)
        layers.append(nxt)
        size += 1
    return out


def enumerate_tours(inst: Instance, k: int | None = None, limit: int = ENUMERATION_LIMIT) -> TourSet:
    """Every customer subset that fits in one vehicle, each with its cheapest depot tour.

    Path costs are built bottom-up: the cheapest depot path through subset S
    ending at j extends the cheapest path through S - {j}.  Feasible subsets are
    closed under removal, so every needed entry is available.
    """
    cap = inst.k if k is None else k
    demands = list(inst.demands)
    subsets = _feasible_subsets(demands, cap, limit)
    w = inst.weights
    paths: dict[tuple, dict[int, tuple[float, int]]] = {}
    members, orders, weights = [], [], []
    for sub in subsets:
        ids = [v + 1 for v in sub]
        if len(sub) == 1:
            paths[sub] = {ids[0]: (float(w[0, ids[0]]), -1)}
        else:
            table = {}
            for pos, j in enumerate(ids):
                prev = sub[:pos] + sub[pos + 1:]
                best, arg = math.inf, -1
                for i, (cost, _) in paths[prev].items():
                    c = cost + float(w[i, j])
                    if c < best:
                        best, arg = c, i
                table[j] = (best, arg)
            paths[sub] = table
        end, best = -1, math.inf
        for j, (cost, _) in paths[sub].items():
            c = cost + float(w[j, 0])
            if c < best:
                best, end = c, j
        order = []
        cur_sub, cur = sub, end
        while cur != -1:
            order.append(cur)
            _, prev_end = paths[cur_sub][cur]
            cur_sub = tuple(v for v in cur_sub if v != cur - 1)
            cur = prev_end
        order.reverse()
        members.append(tuple(ids))
        orders.append(tuple(order))
        weights.append(best)
    return TourSet(tuple(members), tuple(orders), np.array(weights))


def solve_cover_lp(tours: TourSet, n: int) -> LpSolution:
    """min sum w_T x_T  s.t.  every customer covered at least once, x >= 0.

    Solved with the HiGHS simplex, which is deterministic for a fixed input.
    """
    rows, cols = [], []
    for t, mem in enumerate(tours.members):
        for v in mem:
            rows.append(v - 1)
            cols.append(t)
    a = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, len(tours)))
    res = linprog(tours.weights, A_ub=-a, b_ub=-np.ones(n), bounds=(0, None),
                  method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"cover LP failed: {res.message}")
    x = np.clip(res.x, 0.0, None)
    return LpSolution(x, float(tours.weights @ x))


def gamma_select(k: int) -> float:
    """Rounding scale for capacity k: the ratio-balancing choice for k >= 7,
    ln(k/(floor(k/2)+1)) below that; never negative."""
    if k >= 7:
        _, x, _ = unsplit_final_branch(k)  # x is 1/x* of the analysis
        gamma = math.log((k + 1 - x) / (k // 2 + 1))
    else:
        gamma = math.log(k / (k // 2 + 1))
    return max(0.0, gamma)
