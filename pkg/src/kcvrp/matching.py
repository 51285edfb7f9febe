"""Exact minimum-weight perfect matching on complete weighted graphs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import networkx as nx
import numpy as np

# Below this many vertices a bitmask DP is used instead of blossom.
DP_THRESHOLD = 12


class MatchingError(ValueError):
    pass


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    weight: float

    def partner(self) -> dict[int, int]:
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out


def _as_weight_fn(weights) -> Callable[[int, int], float]:
    if callable(weights):
        return weights
    w = np.asarray(weights)
    return lambda a, b: float(w[a, b])


def _norm(a, b):
    return (a, b) if a <= b else (b, a)


def _dp_matching(verts: list, wf, forbidden: frozenset):
    m = len(verts)
    cost = [[wf(verts[i], verts[j]) for j in range(m)] for i in range(m)]
    allowed = [[i != j and _norm(verts[i], verts[j]) not in forbidden for j in range(m)]
               for i in range(m)]
    inf = float("inf")

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[float, int]:
        # mask holds the vertices still unmatched; the lowest one picks a partner
        if mask == 0:
            return 0.0, -1
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        top, arg = inf, -1
        j_bits = rest
        while j_bits:
            low = j_bits & -j_bits
            j = low.bit_length() - 1
            j_bits ^= low
            if not allowed[i][j]:
                continue
            sub, _ = best(rest & ~low)
            if sub + cost[i][j] < top:
                top, arg = sub + cost[i][j], j
        return top, arg

    full = (1 << m) - 1
    total, _ = best(full)
    if total == inf:
        raise MatchingError("infeasible: no perfect matching avoids the forbidden pairs")
    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        _, j = best(mask)
        pairs.append(_norm(verts[i], verts[j]))
        mask &= ~((1 << i) | (1 << j))
    return pairs


def _blossom_matching(verts: list, wf, forbidden: frozenset):
    g = nx.Graph()
    g.add_nodes_from(verts)
    raw = {}
    for x in range(len(verts)):
        for y in range(x + 1, len(verts)):
            a, b = verts[x], verts[y]
            if _norm(a, b) in forbidden:
                continue
            raw[(a, b)] = wf(a, b)
    if not raw:
        raise MatchingError("infeasible: no perfect matching avoids the forbidden pairs")
    top = max(raw.values()) + 1.0
    for (a, b), c in raw.items():
        # every perfect matching has |V|/2 edges, so maximising sum(top - w) minimises sum(w)
        g.add_edge(a, b, weight=top - c)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    if 2 * len(mate) != len(verts):
        raise MatchingError("infeasible: no perfect matching avoids the forbidden pairs")
    return [_norm(a, b) for a, b in mate]


def min_matching_on_forbidden(vertices: Iterable, weights, forbidden: Iterable = (),
                              threshold: int | None = None) -> Matching:
    """Minimum-weight perfect matching that uses none of the ``forbidden`` pairs.

    Forbidden pairs are left out of the graph altogether rather than priced
    with a huge weight, so float precision of the remaining weights is kept.
    """
    verts = sorted(set(vertices))
    if len(verts) % 2:
        raise MatchingError("odd vertex count")
    if not verts:
        return Matching((), 0.0)
    wf = _as_weight_fn(weights)
    forb = frozenset(_norm(a, b) for a, b in forbidden)
    limit = DP_THRESHOLD if threshold is None else threshold
    if len(verts) <= limit:
        pairs = _dp_matching(verts, wf, forb)
    else:
        pairs = _blossom_matching(verts, wf, forb)
    pairs = sorted(pairs)
    if any(p in forb for p in pairs):
        raise MatchingError("internal error: a forbidden pair was selected")
    covered = sorted(v for p in pairs for v in p)
    if covered != verts:
        raise MatchingError("internal error: matching is not perfect")
    return Matching(tuple(pairs), sum(wf(a, b) for a, b in pairs))


def min_perfect_matching(vertices: Iterable, weights, threshold: int | None = None) -> Matching:
    """Exact minimum-weight perfect matching; ``weights`` is a matrix or a callable."""
    return min_matching_on_forbidden(vertices, weights, (), threshold=threshold)


def matching_weight(pairs: Sequence[tuple[int, int]], weights) -> float:
    wf = _as_weight_fn(weights)
    return sum(wf(a, b) for a, b in pairs)


def min_perfect_matching_sparse(vertices: Iterable[int], edges: dict) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching on an explicit (sparse) graph via blossom.

    ``edges`` maps vertex pairs to weights.  Raises MatchingError when the graph
    has no perfect matching.
    """
    verts = list(vertices)
    if len(verts) % 2:
        raise MatchingError("odd vertex count")
    if not edges:
        if verts:
            raise MatchingError("infeasible: graph has no edges")
        return []
    g = nx.Graph()
    g.add_nodes_from(verts)
    top = max(edges.values()) + 1.0
    for (a, b), c in edges.items():
        g.add_edge(a, b, weight=top - c)
    mate = nx.max_weight_matching(g, maxcardinality=True)
    if 2 * len(mate) != len(verts):
        raise MatchingError("infeasible: graph has no perfect matching")
    return sorted(_norm(a, b) for a, b in mate)
