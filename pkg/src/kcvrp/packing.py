"""Cycle and tree packings, plus the augmented-matching tours for capacity 4."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance, Itinerary, Tour, route_weight
from .matching import (Matching, min_matching_on_forbidden, min_perfect_matching,
                       min_perfect_matching_sparse)
from .tsp import cycle_weight, euler_shortcut


@dataclass(frozen=True)
class CyclePacking:
    cycles: tuple[tuple[int, ...], ...]
    flavor: str
    weight: float

    @classmethod
    def of(cls, cycles: Iterable[Sequence[int]], w: np.ndarray, flavor: str = "plain"):
        cycles = tuple(tuple(c) for c in cycles)
        return cls(cycles, flavor, sum(cycle_weight(w, c) for c in cycles))

    @property
    def vertices(self) -> list[int]:
        return [v for c in self.cycles for v in c]


@dataclass(frozen=True)
class TreePacking:
    trees: tuple[tuple[tuple[int, ...], tuple[tuple[int, int], ...]], ...]
    weight: float

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [e for _, es in self.trees for e in es]


def _scale_tol(w: np.ndarray, count: int = 1) -> float:
    return 1e-9 * max(1.0, float(np.max(w))) * max(1, count)


def min_cycle_packing(vertices: Iterable[int], w: np.ndarray) -> CyclePacking:
    """Minimum-weight 2-factor through the degree-2 gadget reduction to perfect matching.

    Every vertex v gets two slots; every edge uv gets two end nodes e_u, e_v joined
    by a free edge.  A slot of u may take e_u at half the edge weight.  An edge is
    in the 2-factor exactly when its end nodes are matched to slots instead of to
    each other.
    """
    verts = sorted(set(vertices))
    m = len(verts)
    if m < 3:
        raise ValueError("a cycle packing needs at least 3 vertices")
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    base = 2 * m
    edges = {}
    for e, (i, j) in enumerate(pairs):
        half = float(w[verts[i], verts[j]]) / 2.0
        end_i, end_j = base + 2 * e, base + 2 * e + 1
        edges[(end_i, end_j)] = 0.0
        for slot in (0, 1):
            edges[(2 * i + slot, end_i)] = half
            edges[(2 * j + slot, end_j)] = half
    nodes = range(base + 2 * len(pairs))
    mate = min_perfect_matching_sparse(nodes, edges)
    chosen = []
    for a, b in mate:
        if a < base <= b:
            e = (b - base) // 2
            if (b - base) % 2 == 0:  # record each used edge once, from its first end
                i, j = pairs[e]
                chosen.append((verts[i], verts[j]))
    cycles = euler_shortcut(chosen)
    packing = CyclePacking.of(cycles, w, "plain")
    assert sorted(packing.vertices) == verts
    assert all(len(c) >= 3 for c in packing.cycles)
    return packing


def mod_k_tree_packing(vertices: Iterable[int], w: np.ndarray, k: int) -> TreePacking:
    """Primal-dual moat growing for f(S) = 1 iff |S| mod k != 0, then pruning."""
    verts = sorted(set(vertices))
    m = len(verts)
    if m % k:
        raise ValueError(f"vertex count {m} is not divisible by {k}")
    idx = np.asarray(verts)
    dist = w[np.ix_(idx, idx)].astype(np.float64)
    comp = np.arange(m)
    size = {c: 1 for c in range(m)}
    active = {c: (1 % k) != 0 for c in range(m)}
    moat = np.zeros(m)
    forest: list[tuple[int, int]] = []
    iu, ju = np.triu_indices(m, 1)
    tol = _scale_tol(w)
    while any(active.values()):
        act = np.array([1.0 if active[c] else 0.0 for c in comp])
        rate = act[iu] + act[ju]
        live = (comp[iu] != comp[ju]) & (rate > 0)
        if not np.any(live):
            break
        slack = dist[iu, ju] - moat[iu] - moat[ju]
        eps = np.full(len(iu), np.inf)
        eps[live] = np.maximum(slack[live], 0.0) / rate[live]
        emin = float(eps.min())
        cand = np.flatnonzero(eps <= emin + tol)
        # ties: lowest component ids first, then lowest vertex indices
        lo = np.minimum(comp[iu[cand]], comp[ju[cand]])
        hi = np.maximum(comp[iu[cand]], comp[ju[cand]])
        pick = cand[np.lexsort((ju[cand], iu[cand], hi, lo))[0]]
        moat += emin * act
        a, b = int(iu[pick]), int(ju[pick])
        forest.append((a, b))
        ca, cb = int(comp[a]), int(comp[b])
        keep, gone = min(ca, cb), max(ca, cb)
        comp[comp == gone] = keep
        size[keep] += size.pop(gone)
        active.pop(gone)
        active[keep] = size[keep] % k != 0
    # prune: drop an edge when both sides it separates have size divisible by k
    adj = defaultdict(list)
    for a, b in forest:
        adj[a].append(b)
        adj[b].append(a)

    def side(a, b):
        seen, stack = {a}, [a]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if (x, y) in ((a, b), (b, a)) or y in seen:
                    continue
                seen.add(y)
                stack.append(y)
        return len(seen)

    kept = []
    for a, b in forest:
        sa = side(a, b)
        sb = side(b, a)
        if sa % k == 0 and sb % k == 0:
            continue
        kept.append((a, b))
    trees = _components(range(m), kept)
    out = []
    total = 0.0
    for members, es in trees:
        if len(members) % k:
            raise AssertionError("pruned tree size is not divisible by k")
        mapped_edges = tuple(sorted((verts[a], verts[b]) if verts[a] < verts[b] else (verts[b], verts[a])
                                    for a, b in es))
        total += sum(float(dist[a, b]) for a, b in es)
        out.append((tuple(verts[v] for v in members), mapped_edges))
    return TreePacking(tuple(out), total)


def _components(nodes, edges):
    parent = {v: v for v in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = defaultdict(list)
    for v in nodes:
        groups[find(v)].append(v)
    by_root = defaultdict(list)
    for a, b in edges:
        by_root[find(a)].append((a, b))
    return [(tuple(sorted(g)), tuple(by_root[r])) for r, g in sorted(groups.items())]


def mod_k_cycle_packing(vertices: Iterable[int], w: np.ndarray, k: int,
                        method: str = "matching") -> CyclePacking:
    """Cycle packing with every cycle length divisible by k.

    ``method="matching"`` adds a minimum matching on the odd-degree tree vertices;
    ``method="double"`` doubles every tree edge instead.
    """
    vertices = sorted(set(vertices))
    trees = mod_k_tree_packing(vertices, w, k)
    tree_edges = trees.edges
    if method == "double":
        extra = list(tree_edges)
        extra_weight = trees.weight
    elif method == "matching":
        deg = defaultdict(int)
        for a, b in tree_edges:
            deg[a] += 1
            deg[b] += 1
        odd = sorted(v for v, d in deg.items() if d % 2)
        match = min_perfect_matching(odd, w)
        extra = list(match.pairs)
        extra_weight = match.weight
    else:
        raise ValueError(f"unknown method {method!r}")
    cycles = euler_shortcut(tree_edges + extra, vertices)
    packing = CyclePacking.of(cycles, w, "mod_k")
    if any(len(c) % k for c in packing.cycles):
        raise AssertionError("cycle length not divisible by k")
    bound = trees.weight + extra_weight
    assert packing.weight <= bound + _scale_tol(w, len(tree_edges) + len(extra))
    return packing


def mod2_cycle_packing(vertices: Iterable[int], w: np.ndarray) -> CyclePacking:
    """Union of a minimum perfect matching and the cheapest one disjoint from it."""
    verts = sorted(set(vertices))
    if len(verts) % 2:
        raise ValueError("odd vertex count")
    if len(verts) < 4:
        raise ValueError("a mod-2 packing needs at least 4 vertices")
    first = min_perfect_matching(verts, w)
    second = min_matching_on_forbidden(verts, w, first.pairs)
    cycles = euler_shortcut(list(first.pairs) + list(second.pairs))
    packing = CyclePacking.of(cycles, w, "mod_2")
    assert all(len(c) % 2 == 0 and len(c) >= 4 for c in packing.cycles)
    return packing


# orientation index -> (tail of first pair reversed?, second pair reversed?)
# 0: (v0,u',u,v,v',v0)  1: (v0,u',u,v',v,v0)  2: (v0,u,u',v,v',v0)  3: (v0,u,u',v',v,v0)
_ORIENTATIONS = ((True, False), (True, True), (False, False), (False, True))


def _oriented_route(p, q, orient):
    flip_p, flip_q = _ORIENTATIONS[orient]
    a = (p[1], p[0]) if flip_p else p
    b = (q[1], q[0]) if flip_q else q
    return (a[0], a[1], b[0], b[1])


def augmented_pair_tour(w: np.ndarray, p: tuple[int, int], q: tuple[int, int]):
    """Cheapest of the four depot tours through matched pairs p and q."""
    best, best_route = np.inf, None
    for orient in range(4):
        route = _oriented_route(p, q, orient)
        cost = route_weight(w, route)
        if cost < best:
            best, best_route = cost, route
    return best, best_route


def augmented_matching_tours(inst: Instance, m_star: Matching) -> Itinerary:
    """4-customer tours from a matching of matched pairs under augmented weights."""
    n = inst.n
    if n % 4:
        raise ValueError("customer count must be divisible by 4")
    w = inst.weights
    pairs = sorted(m_star.pairs)
    if sorted(v for p in pairs for v in p) != list(inst.customers):
        raise ValueError("m_star must be a perfect matching on the customers")
    routes = {}

    def aug(i, j):
        key = (min(i, j), max(i, j))
        if key not in routes:
            routes[key] = augmented_pair_tour(w, pairs[key[0]], pairs[key[1]])
        return routes[key][0]

    super_match = min_perfect_matching(range(len(pairs)), aug)
    tours = []
    for i, j in super_match.pairs:
        _, route = routes[(i, j)]
        tours.append(Tour(route, {v: 1 for v in route}))
    it = Itinerary.build(tours, inst)
    assert abs(it.total_weight - super_match.weight) <= _scale_tol(w, len(tours))
    return it


def collapse_cycles(cycles: Iterable[Sequence[int]], copy_of: Sequence[int]) -> list[list[int]]:
    """Shortcut cycles over unit copies down to cycles over the customers they copy.

    Copies of one customer may sit on several cycles; such cycles merge into one
    Eulerian component, which is then shortcut to a single cycle.
    """
    edges = []
    touched = set()
    for cyc in cycles:
        mapped = [copy_of[v] for v in cyc]
        touched.update(mapped)
        if len(mapped) >= 2:
            for a, b in zip(mapped, mapped[1:] + mapped[:1]):
                if a != b:
                    edges.append((a, b))
    return euler_shortcut(edges, touched)
