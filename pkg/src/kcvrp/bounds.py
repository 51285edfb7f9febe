"""Lower bounds and closed-form approximation ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from scipy.optimize import brentq

from .instance import Instance
from .tsp import mst


@dataclass(frozen=True)
class RatioReport:
    variant: str
    k: int
    alpha: float | None
    value: float
    branch: str
    params: dict = field(default_factory=dict)


def lb_instance(inst: Instance) -> float:
    """max{(2/k) * Delta, MST over depot and customers}; never above the optimum."""
    tree = mst(range(inst.n + 1), inst.weights)
    return max(2.0 / inst.k * inst.delta, tree.weight)


def _check_alpha(alpha: float):
    if not 1.0 <= alpha <= 1.5 + 1e-12:
        raise ValueError(f"alpha must lie in [1, 3/2], got {alpha}")


def _check_k(k: int):
    if k < 3:
        raise ValueError(f"k must be at least 3, got {k}")


# ---------------------------------------------------------------- splittable

def ratio_split_tradeoff(alpha: float, k: int) -> RatioReport:
    """Worst case of the best of mod-k packing, alpha-cycle and Christofides partitioning."""
    _check_alpha(alpha)
    _check_k(k)
    if alpha <= 7 / 6:
        value = alpha + 1 - alpha / k - (alpha - 0.5) / k
        branch = "alpha<=7/6"
    elif k <= 5:
        value = (13 * k - 11) / (6 * k)
        branch = "alpha>=7/6, k<=5"
    else:
        value = alpha + 1 - alpha / k - 4 * (alpha - 1) / k
        branch = "alpha>=7/6, k>=6"
    return RatioReport("split", k, alpha, value, branch)


def split_final_l(k: int) -> int:
    return math.ceil((math.sqrt(2 * k - 1) - 1) / 2)


def ratio_split_final(k: int) -> RatioReport:
    _check_k(k)
    l = split_final_l(k)
    value = 2.5 - (2 * l * l + k + l - 1) / (2 * k * l)
    if not value < 2.5 - math.sqrt(2 / k):
        raise AssertionError(f"strict bound 5/2 - sqrt(2/k) fails at k={k}")
    return RatioReport("split", k, 1.5, value, "final", {"l": l})


def lp_closed_form(k: int) -> tuple[int, float]:
    """Minimum of sum c_i x_i over nonincreasing x >= 0 summing to 1,
    with c_1 = (k+3)/(2k) and c_i = 2i/k."""
    _check_k(k)
    l = split_final_l(k)
    return l, (2 * l * l + 2 * l + k - 1) / (2 * k * l)


def core_value(k: int) -> float:
    """2 - (2l^2+k-1)/(2kl), which equals (2k+1)/k minus the LP optimum."""
    l = split_final_l(k)
    return 2 - (2 * l * l + k - 1) / (2 * k * l)


# ---------------------------------------------------------------- unsplittable

def ratio_unsplit_tradeoff(alpha: float, k: int) -> RatioReport:
    _check_alpha(alpha)
    _check_k(k)
    h = k // 2 + 1
    if k <= 5:
        value = (2 * (k // 2) + 1) / h + math.log(k / h)
        branch = "3<=k<=5"
    elif k == 6 and alpha >= 7 / 6:
        value = 15 / 8 + math.log(4 / 3)
        branch = "k=6, alpha>=7/6"
    elif k == 7 and alpha >= 17 / 12:
        value = 33 / 16 + math.log(4 / 3)
        branch = "k=7, alpha>=17/12"
    else:
        value = ((alpha + 1) * (k // 2) + 1) / h + math.log((k - 4 * (alpha - 1)) / h)
        branch = "general"
    return RatioReport("unsplit", k, alpha, value, branch)


def l_odd(k: int) -> float:
    return (math.sqrt((k - 1) ** 2 + 8 * (k - 1) * (k + 1) ** 2) - (k - 1)) / (4 * (k + 1))


def l_even(k: int) -> float:
    return (math.sqrt(k * k + 8 * k * (k + 1) * (k + 2)) - k) / (4 * (k + 2))


def rho_odd(k: int, x: float) -> float:
    return (2.5 + math.log(2) + math.log((k + 1 - x) / (k + 1))
            - (k - 1 + 6 * x) / (2 * (k + 1) * x))


def rho_even(k: int, x: float) -> float:
    return (2.5 + math.log(2) + math.log((k + 1 - x) / (k + 2))
            - (k + 6 * x) / (2 * (k + 2) * x))


def unsplit_final_branch(k: int) -> tuple[float, int, float]:
    """(l, integer x attaining the max, value) for k >= 7."""
    if k % 2:
        l, rho = l_odd(k), rho_odd
    else:
        l, rho = l_even(k), rho_even
    options = sorted({max(1, math.floor(l)), max(1, math.ceil(l))})
    # ties go to the smaller x
    x = max(options, key=lambda t: (rho(k, t), -t))
    return l, x, rho(k, x)


def ratio_unsplit_final(k: int) -> RatioReport:
    _check_k(k)
    if k < 7:
        rep = ratio_unsplit_tradeoff(1.5, k)
        return RatioReport("unsplit", k, 1.5, rep.value, "small-k:" + rep.branch)
    l, x, value = unsplit_final_branch(k)
    key = "l_o" if k % 2 else "l_e"
    return RatioReport("unsplit", k, 1.5, value, "odd" if k % 2 else "even", {key: l, "x": x})


def unsplit5_ratio() -> RatioReport:
    """Capacity-5 trade-off: the root of (5/3)(x-1) + ln((3+2x)/3) = 0 gives (11-6x)/3."""
    root = brentq(lambda x: (5 / 3) * (x - 1) + math.log((3 + 2 * x) / 3), 0.0, 1.0, xtol=1e-15)
    return RatioReport("unsplit", 5, 1.5, (11 - 6 * root) / 3, "k=5 mod-5 trade-off", {"chi": root})


def special_ratio(variant: str, k: int) -> float | None:
    """Ratios of the capacity-specific algorithms (None when there is none)."""
    if variant == "split":
        return 1.5 if k in (3, 4) else None
    return {3: 1.5, 4: 1.75}.get(k) if k != 5 else unsplit5_ratio().value


# ---------------------------------------------------------------- tables

TABLE_ROWS = ("special", "tradeoff", "final")


def table_report(variant: str, ks: Iterable[int], alpha: float = 1.5) -> dict[str, dict[int, float | None]]:
    """Rows keyed like the result tables, each mapping k to a ratio (None = no entry)."""
    ks = list(ks)
    if variant == "split":
        return {
            "special": {k: special_ratio("split", k) for k in ks},
            "tradeoff": {k: ratio_split_tradeoff(alpha, k).value for k in ks},
            "final": {k: ratio_split_final(k).value for k in ks},
        }
    if variant == "unsplit":
        return {
            "special": {k: special_ratio("unsplit", k) if k <= 5 else None for k in ks},
            "tradeoff": {k: ratio_unsplit_tradeoff(alpha, k).value for k in ks},
            "final": {k: ratio_unsplit_final(k).value for k in ks},
        }
    raise ValueError("variant must be 'split' or 'unsplit'")


def format_table(rows: dict[str, dict[int, float | None]], digits: int = 3) -> str:
    ks = sorted({k for r in rows.values() for k in r})
    width = max(8, digits + 4)
    lines = ["k".ljust(10) + "".join(str(k).rjust(width) for k in ks)]
    for name, row in rows.items():
        cells = []
        for k in ks:
            v = row.get(k)
            cells.append(("-" if v is None else f"{v:.{digits}f}").rjust(width))
        lines.append(name.ljust(10) + "".join(cells))
    return "\n".join(lines)
