"""Cutting demand-weighted paths and cycles into capacity segments.

A *sequence* is a list of ``(customer, demand)`` in visiting order.  It is
expanded into unit slots, the slots are cut into consecutive segments of
given capacities, and each segment becomes a depot tour.  For unsplittable
routing, customers that end up in two segments are handed to one of them
("repair"); the direction of the hand-over follows the caller's policy.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .instance import Tour, route_weight

Segment = list  # list of [customer, amount]


def cut(seq: Sequence[tuple[int, int]], caps: Sequence[int], start: int = 0) -> list[Segment]:
    """Cut the unit slots of ``seq`` (rotated by ``start``) into segments of ``caps``.

    The last segment absorbs whatever is left, so callers pass caps that add up
    to at least the total demand.  Empty segments are dropped.
    """
    slots = [c for c, d in seq for _ in range(d)]
    if start:
        slots = slots[start:] + slots[:start]
    segs: list[Segment] = []
    pos = 0
    for idx, cap in enumerate(caps):
        end = len(slots) if idx == len(caps) - 1 else min(len(slots), pos + cap)
        chunk = slots[pos:end]
        pos = end
        if not chunk:
            continue
        seg: Segment = []
        where: dict[int, int] = {}
        for c in chunk:
            if seg and seg[-1][0] == c:
                seg[-1][1] += 1
            elif c in where:
                # wrapped back onto a customer already in this segment
                seg[where[c]][1] += 1
            else:
                where[c] = len(seg)
                seg.append([c, 1])
        segs.append(seg)
    return segs


def segments_weight(w: np.ndarray, segs: Sequence[Segment]) -> float:
    return sum(route_weight(w, [c for c, _ in s]) for s in segs)


def boundary_split(segs: Sequence[Segment], a: int, b: int):
    """Customer cut by the boundary from segment ``a`` into segment ``b``, or None."""
    if not segs[a] or not segs[b] or a == b:
        return None
    last, first = segs[a][-1], segs[b][0]
    if last[0] == first[0]:
        return last[0], last[1], first[1]
    return None


def repair(segs: Sequence[Segment], demand: dict[int, int], direction: str = "cw") -> list[Segment]:
    """Serve every customer from exactly one segment.

    A customer cut by a boundary goes wholly to the later segment ("cw") or to
    the earlier one ("ccw").  A customer spread over three or more segments is
    given to a segment that holds nothing else, which then becomes its trivial
    tour.  Removing a customer from a route only shortcuts it.
    """
    holders: dict[int, list[int]] = {}
    for idx, s in enumerate(segs):
        for c, _ in s:
            holders.setdefault(c, []).append(idx)
    keep: dict[int, int] = {}
    for c, idxs in holders.items():
        if len(idxs) == 1:
            keep[c] = idxs[0]
            continue
        if len(idxs) >= 3:
            solo = [i for i in idxs if len(segs[i]) == 1]
            if not solo:
                raise AssertionError(f"customer {c} spread over tours without a solo tour")
            keep[c] = solo[0]
            continue
        a, b = idxs
        # c is last of the earlier and first of the later segment; b -> a is the wrap
        forward = segs[a][-1][0] == c and segs[b][0][0] == c
        wrap = segs[b][-1][0] == c and segs[a][0][0] == c
        if forward and (b == a + 1 or not wrap):
            earlier, later = a, b
        elif wrap:
            earlier, later = b, a
        else:
            raise AssertionError(f"customer {c} is split across non-adjacent tours")
        keep[c] = later if direction == "cw" else earlier
    out = []
    for idx, s in enumerate(segs):
        new = [[c, demand[c]] for c, _ in s if keep[c] == idx]
        if new:
            out.append(new)
    return out


def to_tours(segs: Sequence[Segment]) -> list[Tour]:
    return [Tour(tuple(c for c, _ in s), {c: a for c, a in s}) for s in segs]


def seg_loads(segs: Sequence[Segment]) -> list[int]:
    return [sum(a for _, a in s) for s in segs]
