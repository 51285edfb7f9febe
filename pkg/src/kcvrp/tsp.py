"""Spanning trees, Euler shortcutting, Christofides cycles and exact small TSP."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .matching import min_perfect_matching

HELD_KARP_LIMIT = 14


@dataclass(frozen=True)
class HamCycle:
    order: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class Tree:
    edges: tuple[tuple[int, int], ...]
    weight: float


def cycle_weight(w: np.ndarray, order: Sequence[int]) -> float:
    """Closed-walk weight; a 2-vertex cycle counts its edge twice, a 1-vertex cycle is 0."""
    if len(order) < 2:
        return 0.0
    idx = np.asarray(order)
    return float(w[idx, np.roll(idx, -1)].sum())


def mst(vertices: Iterable[int], w: np.ndarray) -> Tree:
    """Prim's algorithm on the complete graph; ties go to the lowest vertex id."""
    verts = sorted(set(vertices))
    if not verts:
        raise ValueError("mst needs at least one vertex")
    idx = np.asarray(verts)
    sub = w[np.ix_(idx, idx)]
    m = len(verts)
    in_tree = np.zeros(m, dtype=bool)
    in_tree[0] = True
    best = sub[0].copy()
    parent = np.zeros(m, dtype=int)
    edges = []
    total = 0.0
    for _ in range(m - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        in_tree[j] = True
        a, b = verts[parent[j]], verts[j]
        edges.append((min(a, b), max(a, b)))
        total += float(sub[parent[j], j])
        closer = (~in_tree) & (sub[j] < best)
        best = np.where(closer, sub[j], best)
        parent = np.where(closer, j, parent)
    return Tree(tuple(sorted(edges)), total)


def euler_shortcut(edges: Iterable[tuple[int, int]], vertices: Iterable[int] = ()) -> list[list[int]]:
    """One shortcut cycle per connected component of an even multigraph.

    Each Euler walk starts at the component's lowest vertex and always leaves
    along the lowest-id unused edge; repeated vertices are skipped.  Vertices in
    ``vertices`` that touch no edge come back as singleton cycles.
    """
    adj: dict[int, list[list]] = defaultdict(list)
    edge_list = list(edges)
    used = [False] * len(edge_list)
    for eid, (a, b) in enumerate(edge_list):
        adj[a].append([b, eid])
        if a != b:
            adj[b].append([a, eid])
    for v, nbrs in adj.items():
        deg = sum(2 if u == v else 1 for u, _ in nbrs)
        if deg % 2:
            raise ValueError(f"odd-degree vertex {v}")
        nbrs.sort()
    ptr = defaultdict(int)
    seen: set[int] = set()
    cycles = []
    for start in sorted(set(adj) | set(vertices)):
        if start in seen:
            continue
        if start not in adj:
            seen.add(start)
            cycles.append([start])
            continue
        # iterative Hierholzer
        stack, walk = [start], []
        while stack:
            v = stack[-1]
            nbrs = adj[v]
            while ptr[v] < len(nbrs) and used[nbrs[ptr[v]][1]]:
                ptr[v] += 1
            if ptr[v] == len(nbrs):
                walk.append(stack.pop())
            else:
                u, eid = nbrs[ptr[v]]
                used[eid] = True
                stack.append(u)
        walk.reverse()
        cyc = []
        for v in walk:
            if v not in seen:
                seen.add(v)
                cyc.append(v)
        cycles.append(cyc)
    return cycles


def christofides(vertices: Iterable[int], w: np.ndarray) -> HamCycle:
    verts = sorted(set(vertices))
    if len(verts) <= 2:
        return HamCycle(tuple(verts), cycle_weight(w, verts))
    tree = mst(verts, w)
    deg = defaultdict(int)
    for a, b in tree.edges:
        deg[a] += 1
        deg[b] += 1
    odd = [v for v in verts if deg[v] % 2]
    match = min_perfect_matching(odd, w)
    cycles = euler_shortcut(list(tree.edges) + list(match.pairs))
    assert len(cycles) == 1
    order = tuple(cycles[0])
    weight = cycle_weight(w, order)
    scale = 1e-9 * max(1.0, float(np.max(w)))
    assert weight <= tree.weight + match.weight + scale * len(verts), "Christofides bound broken"
    return HamCycle(order, weight)


def held_karp_paths(w: np.ndarray, start: int, others: Sequence[int]):
    """dp[mask][j]: cheapest path from ``start`` through the ``mask`` subset of ``others`` ending at others[j]."""
    m = len(others)
    idx = np.asarray(others, dtype=int)
    dist = w[np.ix_(idx, idx)]
    dp = np.full((1 << m, m), np.inf)
    for j in range(m):
        dp[1 << j, j] = w[start, others[j]]
    for mask in range(1, 1 << m):
        if mask & (mask - 1) == 0:
            continue
        bits = [j for j in range(m) if mask >> j & 1]
        prev = np.array([mask ^ (1 << j) for j in bits])
        # dp[prev_j, i] + dist[i, j], minimised over i
        cand = dp[prev] + dist[:, bits].T
        dp[mask, bits] = cand.min(axis=1)
    return dp


def tsp_exact(vertices: Iterable[int], w: np.ndarray) -> HamCycle:
    """Exact minimum Hamiltonian cycle by subset dynamic programming."""
    verts = sorted(set(vertices))
    if len(verts) > HELD_KARP_LIMIT:
        raise ValueError(f"tsp_exact is limited to {HELD_KARP_LIMIT} vertices")
    if len(verts) <= 3:
        return HamCycle(tuple(verts), cycle_weight(w, verts))
    start, others = verts[0], verts[1:]
    m = len(others)
    dp = held_karp_paths(w, start, others)
    full = (1 << m) - 1
    closing = dp[full] + w[np.asarray(others), start]
    j = int(np.argmin(closing))
    best = float(closing[j])
    # walk back through the table
    order = []
    mask = full
    idx = np.asarray(others)
    while True:
        order.append(others[j])
        prev = mask ^ (1 << j)
        if prev == 0:
            break
        cand = dp[prev] + w[idx, others[j]]
        j = int(np.argmin(cand))
        mask = prev
    order.append(start)
    order.reverse()
    return HamCycle(tuple(order), best)


def shortcut_order(order: Sequence[int], keep: Iterable[int]) -> list[int]:
    """Restrict a cyclic order to the vertices in ``keep`` (shortcutting the rest)."""
    keep = set(keep)
    return [v for v in order if v in keep]
