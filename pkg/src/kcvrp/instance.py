"""Problem data model: instances, tours, itineraries, file I/O and transformations."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

VARIANTS = ("splittable", "unit", "unsplittable")
METRICS = ("euclidean", "random-shortest-path-closure")


class InstanceError(ValueError):
    """Raised for malformed or assumption-violating instances."""


class InfeasibleItinerary(AssertionError):
    """Raised when an itinerary breaks capacity, delivery or visit rules."""


def tolerance(weights: np.ndarray) -> float:
    """Absolute comparison tolerance used for every weight inequality."""
    top = float(np.max(weights)) if weights.size else 0.0
    return 1e-9 * max(top, 1.0)


@dataclass(frozen=True, eq=False)
class Instance:
    """Depot 0 plus customers 1..n with integer demands and a semi-metric.

    ``origin`` maps each customer to the customer of the root instance it was
    derived from (unit expansion), or to 0 for a padded depot copy.  It is
    ``None`` for instances that were parsed or generated directly.
    """

    k: int
    variant: str
    demands: tuple[int, ...]
    weights: np.ndarray
    labels: tuple[str, ...] | None = None
    origin: tuple[int, ...] | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "demands", tuple(int(d) for d in self.demands))

    @property
    def n(self) -> int:
        return len(self.demands)

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def demand(self, v: int) -> int:
        return self.demands[v - 1] if v else 0

    @property
    def tol(self) -> float:
        return tolerance(self.weights)

    @property
    def delta(self) -> float:
        """Demand-weighted star weight: sum of d_i * w(depot, v_i)."""
        return float(np.dot(self.demands, self.weights[0, 1:]))

    def star(self, vertices: Iterable[int]) -> float:
        return sum(self.demand(v) * float(self.weights[0, v]) for v in vertices)

    def root_customer(self, v: int) -> int:
        return self.origin[v - 1] if self.origin is not None else v

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.k}|{self.variant}|{self.demands}".encode())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.k == other.k and self.variant == other.variant
                and self.demands == other.demands
                and self.weights.shape == other.weights.shape
                and bool(np.array_equal(self.weights, other.weights)))

    __hash__ = None


def validate(inst: Instance, check_triangle: bool = True) -> Instance:
    """Check the structural and metric assumptions; return the instance."""
    n, k, w = inst.n, inst.k, inst.weights
    if inst.variant not in VARIANTS:
        raise InstanceError(f"unknown variant {inst.variant!r}")
    if k < 1:
        raise InstanceError("capacity must be a positive integer")
    if w.shape != (n + 1, n + 1):
        raise InstanceError(f"weight table must be {n + 1}x{n + 1}, got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InstanceError("weights must be finite and nonnegative")
    tol = inst.tol
    if np.any(np.abs(w - w.T) > tol):
        raise InstanceError("weight matrix is not symmetric")
    if np.any(np.abs(np.diag(w)) > tol):
        raise InstanceError("weight matrix has a nonzero diagonal")
    for d in inst.demands:
        if d < 1:
            raise InstanceError("demands must be positive integers")
        if inst.variant == "unit" and d != 1:
            raise InstanceError("unit variant requires every demand to be 1")
        if inst.variant == "unsplittable" and d >= k:
            raise InstanceError(f"demand {d} >= capacity {k}")
        # a lone customer cannot be split across other customers' tours,
        # so the (n-1)(k-1) cap only makes sense from two customers on
        if inst.variant == "splittable" and n >= 2 and d > (n - 1) * (k - 1):
            raise InstanceError(f"demand {d} exceeds (n-1)(k-1) = {(n - 1) * (k - 1)}")
    if check_triangle and n >= 2:
        # w[i,j] <= w[i,t] + w[t,j] for every t, vectorised over t
        for t in range(n + 1):
            via = w[:, t][:, None] + w[t, :][None, :]
            if np.any(w > via + tol):
                i, j = np.argwhere(w > via + tol)[0]
                raise InstanceError(f"triangle inequality violated on ({i},{j}) via {t}")
    return inst


def make_instance(k, variant, demands, weights, labels=None, check_triangle=True) -> Instance:
    return validate(Instance(k=k, variant=variant, demands=tuple(demands),
                             weights=np.asarray(weights, dtype=np.float64),
                             labels=tuple(labels) if labels else None),
                    check_triangle=check_triangle)


def euclidean_matrix(coords) -> np.ndarray:
    p = np.asarray(coords, dtype=np.float64)
    diff = p[:, None, :] - p[None, :, :]
    w = np.sqrt((diff ** 2).sum(axis=-1))
    np.fill_diagonal(w, 0.0)
    return w


def from_coords(k: int, variant: str, demands: Sequence[int], coords) -> Instance:
    """Convenience constructor from a plain coordinate list (row 0 = depot)."""
    return make_instance(k, variant, demands, euclidean_matrix(coords))


# ---------------------------------------------------------------- tours

@dataclass(frozen=True)
class Tour:
    customers: tuple[int, ...]
    deliver: dict = field(hash=False, compare=True)

    @classmethod
    def of(cls, customers: Sequence[int], deliver: dict | None = None, inst: Instance | None = None):
        customers = tuple(customers)
        if deliver is None:
            deliver = {v: inst.demand(v) for v in customers}
        return cls(customers, dict(deliver))

    def weight(self, w: np.ndarray) -> float:
        return route_weight(w, self.customers)

    @property
    def load(self) -> int:
        return sum(self.deliver.values())


def route_weight(w: np.ndarray, route: Sequence[int]) -> float:
    """Weight of depot -> route[0] -> ... -> route[-1] -> depot."""
    if not route:
        return 0.0
    total = float(w[0, route[0]]) + float(w[route[-1], 0])
    for a, b in zip(route, route[1:]):
        total += float(w[a, b])
    return total


@dataclass(frozen=True)
class Itinerary:
    tours: tuple[Tour, ...]
    total_weight: float

    @classmethod
    def build(cls, tours: Iterable[Tour], inst: Instance) -> "Itinerary":
        tours = tuple(t for t in tours if t.customers)
        return cls(tours, sum(t.weight(inst.weights) for t in tours))

    def __len__(self):
        return len(self.tours)


def check_itinerary(inst: Instance, it: Itinerary, capacity: int | None = None,
                    customers: Iterable[int] | None = None) -> None:
    """Raise InfeasibleItinerary unless ``it`` is a feasible solution of ``inst``.

    With ``customers`` given, exactly those customers must be served and no other.
    """
    cap = inst.k if capacity is None else capacity
    wanted = set(inst.customers) if customers is None else set(customers)
    served = [0] * (inst.n + 1)
    visits = [0] * (inst.n + 1)
    for idx, t in enumerate(it.tours):
        if len(set(t.customers)) != len(t.customers):
            raise InfeasibleItinerary(f"tour {idx} repeats a customer")
        if set(t.deliver) != set(t.customers):
            raise InfeasibleItinerary(f"tour {idx} delivery map does not match its route")
        for v, amount in t.deliver.items():
            if not 1 <= v <= inst.n:
                raise InfeasibleItinerary(f"tour {idx} visits unknown vertex {v}")
            if int(amount) != amount or amount < 1:
                raise InfeasibleItinerary(f"tour {idx} delivers a non-positive or fractional amount")
            served[v] += amount
            visits[v] += 1
        if t.load > cap:
            raise InfeasibleItinerary(f"tour {idx} carries {t.load} > capacity {cap}")
    for v in inst.customers:
        if v not in wanted:
            if served[v]:
                raise InfeasibleItinerary(f"customer {v} is served but was not requested")
            continue
        if served[v] != inst.demand(v):
            raise InfeasibleItinerary(f"customer {v} receives {served[v]} of {inst.demand(v)}")
        if inst.variant != "splittable" and visits[v] != 1:
            raise InfeasibleItinerary(f"customer {v} is visited by {visits[v]} tours")
    total = sum(t.weight(inst.weights) for t in it.tours)
    if abs(total - it.total_weight) > inst.tol * max(1, len(it.tours)):
        raise InfeasibleItinerary("recorded total weight does not match the tours")


# ---------------------------------------------------------------- transformations

def expand_unit(inst: Instance) -> Instance:
    """Replace each customer of demand d by d colocated unit-demand copies."""
    src = [v for v in inst.customers for _ in range(inst.demand(v))]
    idx = np.array([0] + src)
    w = inst.weights[np.ix_(idx, idx)]
    origin = tuple(inst.root_customer(v) for v in src)
    return Instance(k=inst.k, variant="unit", demands=(1,) * len(src), weights=w, origin=origin)


def unit_copies(inst: Instance) -> tuple[Instance, list[int]]:
    """Unit copies of ``inst`` plus the list mapping copy -> customer of ``inst``."""
    src = [v for v in inst.customers for _ in range(inst.demand(v))]
    idx = np.array([0] + src)
    w = inst.weights[np.ix_(idx, idx)]
    return Instance(k=inst.k, variant="unit", demands=(1,) * len(src), weights=w), [0] + src


def pad_depot_customers(inst: Instance, m: int) -> Instance:
    """Append ``m`` unit-demand customers sitting on the depot."""
    if m < 0:
        raise ValueError("padding count must be nonnegative")
    if m == 0:
        return inst
    n = inst.n
    idx = np.array(list(range(n + 1)) + [0] * m)
    w = inst.weights[np.ix_(idx, idx)]
    origin = tuple(inst.root_customer(v) for v in inst.customers) + (0,) * m
    variant = inst.variant
    return Instance(k=inst.k, variant=variant, demands=inst.demands + (1,) * m,
                    weights=w, origin=origin)


def pad_to_multiple(inst: Instance, q: int, minimum: int = 0) -> Instance:
    """Pad with depot copies so the total demand is a multiple of q and at least ``minimum``."""
    total = sum(inst.demands)
    target = max(total, minimum)
    target += (-target) % q
    return pad_depot_customers(inst, target - total)


def lift_itinerary(it: Itinerary, derived: Instance, base: Instance) -> Itinerary:
    """Map an itinerary of a derived instance (expanded and/or padded) back to ``base``.

    Depot copies are dropped and copies of one customer inside a tour are merged
    into its first visit, which never increases weight under the triangle inequality.
    ``base`` must be the root instance the origin mapping refers to.
    """
    tours = []
    for t in it.tours:
        route: list[int] = []
        deliver: dict[int, int] = {}
        for v in t.customers:
            r = derived.root_customer(v)
            if r == 0:
                continue
            if r not in deliver:
                route.append(r)
                deliver[r] = 0
            deliver[r] += t.deliver[v]
        if route:
            tours.append(Tour(tuple(route), deliver))
    return Itinerary.build(tours, base)


# ---------------------------------------------------------------- parsing

def _strip_comments(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def parse_instance(text: str, check_triangle: bool = True) -> Instance:
    lines = _strip_comments(text)
    if len(lines) < 3:
        raise InstanceError("instance file is too short")
    head = lines[0].split()
    if len(head) != 7 or head[0] != "CVRP" or head[1] != "k" or head[3] != "variant" or head[5] != "n":
        raise InstanceError("header must read 'CVRP k <int> variant <name> n <int>'")
    try:
        k, n = int(head[2]), int(head[6])
    except ValueError as exc:
        raise InstanceError("k and n must be integers") from exc
    variant = head[4]
    if variant not in VARIANTS:
        raise InstanceError(f"unknown variant {variant!r}")
    dem = lines[1].split()
    if dem[0] != "demands" or len(dem) != n + 1:
        raise InstanceError(f"demands line must list exactly {n} integers")
    try:
        demands = [int(x) for x in dem[1:]]
    except ValueError as exc:
        raise InstanceError("demands must be integers") from exc
    kind = lines[2]
    body = lines[3:]
    if len(body) != n + 1:
        raise InstanceError(f"expected {n + 1} rows after '{kind}', got {len(body)}")
    try:
        rows = [[float(x) for x in line.split()] for line in body]
    except ValueError as exc:
        raise InstanceError("non-numeric entry in table") from exc
    if kind == "matrix":
        if any(len(r) != n + 1 for r in rows):
            raise InstanceError(f"every matrix row needs {n + 1} entries")
        w = np.array(rows)
    elif kind == "coords":
        if any(len(r) != 2 for r in rows):
            raise InstanceError("every coordinate line needs exactly 2 numbers")
        w = euclidean_matrix(rows)
    else:
        raise InstanceError("third line must be 'matrix' or 'coords'")
    return make_instance(k, variant, demands, w, check_triangle=check_triangle)


def serialize_instance(inst: Instance) -> str:
    out = [f"CVRP k {inst.k} variant {inst.variant} n {inst.n}",
           "demands " + " ".join(str(d) for d in inst.demands),
           "matrix"]
    for row in inst.weights:
        out.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- generation

def demand_range(n: int, k: int, variant: str) -> tuple[int, int]:
    if variant == "unit":
        return 1, 1
    if variant == "unsplittable":
        return 1, k - 1
    return 1, max(1, (n - 1) * (k - 1)) if n >= 2 else k


def gen_random(n: int, k: int, variant: str, metric: str = "euclidean", seed: int = 0,
               max_demand: int | None = None) -> Instance:
    """Random instance; identical output for identical arguments.

    ``max_demand`` caps the demand range, which keeps unit expansions small.
    """
    if n < 1 or k < 3:
        raise ValueError("need n >= 1 and k >= 3")
    if variant not in VARIANTS or metric not in METRICS:
        raise ValueError("unknown variant or metric")
    rng = np.random.default_rng(seed)
    if metric == "euclidean":
        w = euclidean_matrix(rng.random((n + 1, 2)))
    else:
        raw = rng.uniform(1.0, 10.0, size=(n + 1, n + 1))
        w = np.triu(raw, 1)
        w = w + w.T
        # Floyd-Warshall closure makes the table a metric
        for t in range(n + 1):
            w = np.minimum(w, w[:, t][:, None] + w[t, :][None, :])
        np.fill_diagonal(w, 0.0)
    lo, hi = demand_range(n, k, variant)
    if max_demand is not None:
        hi = max(lo, min(hi, max_demand))
    demands = rng.integers(lo, hi + 1, size=n).tolist()
    return make_instance(k, variant, demands, w)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


__all__ = [
    "Instance", "Tour", "Itinerary", "InstanceError", "InfeasibleItinerary",
    "validate", "make_instance", "from_coords", "euclidean_matrix", "route_weight",
    "check_itinerary", "expand_unit", "pad_depot_customers", "pad_to_multiple",
    "lift_itinerary", "parse_instance", "serialize_instance", "gen_random",
    "tolerance", "ceil_div", "unit_copies",
]
