"""Command line: gen, solve, ratio-table, verify."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import split_solvers as split
from . import unsplit_solvers as unsplit
from .bounds import (format_table, lb_instance, ratio_split_final, ratio_split_tradeoff,
                     table_report)
from .instance import (InfeasibleItinerary, Instance, InstanceError, Itinerary, METRICS, VARIANTS,
                       check_itinerary, gen_random, pad_to_multiple, expand_unit,
                       parse_instance, serialize_instance)
from .lp import EnumerationLimit, gamma_select
from .oracle import OracleTooLarge, exact_cvrp, oracle_nmax
from .packing import min_cycle_packing, mod_k_cycle_packing
from .tsp import christofides

SCHEMA = 1


class UsageError(Exception):
    pass


def sig(x: float | None, digits: int = 12):
    if x is None:
        return None
    return float(f"{x:.{digits}g}")


@dataclass
class RunReport:
    instance: str
    algorithm: str
    seed: int
    weight: float
    certified_bound: float | None
    lower_bound: float
    oracle_opt: float | None
    elapsed_ms: float
    ratio: float | None = None

    def to_json(self) -> dict:
        out = {"schema": SCHEMA}
        for key, value in asdict(self).items():
            out[key] = sig(value) if isinstance(value, float) else value
        return out


# ---------------------------------------------------------------- algorithms

SPLIT_VARIANTS = ("splittable", "unit")
UNSPLIT_VARIANTS = ("unsplittable", "unit")


def _customer_cycle(inst: Instance):
    verts = list(inst.customers)
    return christofides(verts, inst.weights).order


def _packing_run(inst: Instance):
    work = pad_to_multiple(expand_unit(inst), inst.k, inst.k)
    packing = mod_k_cycle_packing(work.customers, work.weights, inst.k)
    rep = split.ex_itp(work, packing)
    return split._finish("ex-itp", inst, work, rep, rep.certified_bound)


def _hr_run(inst: Instance):
    if inst.n == 1:
        raise UsageError("hr-itp needs a cycle of customers")
    return split.hr_itp(inst, _customer_cycle(inst))


def _gamma(inst, gamma):
    return gamma_select(inst.k) if gamma is None else gamma


ALGORITHMS = {
    "ag-itp": (SPLIT_VARIANTS, lambda i, a: split.ag_itp(i, split.hcs(i))),
    "hr-itp": (SPLIT_VARIANTS, lambda i, a: _hr_run(i)),
    "ex-itp": (SPLIT_VARIANTS, lambda i, a: _packing_run(i)),
    "split3": (SPLIT_VARIANTS, lambda i, a: split.split3(i)),
    "split4-mod2": (SPLIT_VARIANTS, lambda i, a: split.split4_mod2(i)),
    "split4-matching": (SPLIT_VARIANTS, lambda i, a: split.split4_matching(i)),
    "split-tradeoff": (SPLIT_VARIANTS, lambda i, a: split.split_tradeoff(i)),
    "split-final": (SPLIT_VARIANTS, lambda i, a: split.split_final(i)),
    "portfolio-split": (SPLIT_VARIANTS, lambda i, a: split.portfolio_split(i)),
    "refined-uitp": (UNSPLIT_VARIANTS, lambda i, a: unsplit.refined_ag_uitp(i, split.hcs(i))),
    "unsplit3": (UNSPLIT_VARIANTS, lambda i, a: unsplit.unsplit3(i)),
    "unsplit4": (UNSPLIT_VARIANTS, lambda i, a: unsplit.unsplit4(i)),
    "unsplit5": (UNSPLIT_VARIANTS, lambda i, a: unsplit.unsplit5(i, a.gamma, a.seed)),
    "lp-uitp": (UNSPLIT_VARIANTS,
                lambda i, a: unsplit.lp_uitp(i, split.hcs(i), _gamma(i, a.gamma), a.seed)),
    "portfolio-unsplit": (UNSPLIT_VARIANTS, lambda i, a: unsplit.unsplit_portfolio(i, seed=a.seed)),
}

FIXED_K = {"split3": 3, "split4-mod2": 4, "split4-matching": 4,
           "unsplit3": 3, "unsplit4": 4, "unsplit5": 5}


def run_algorithm(inst: Instance, algo: str, args) -> split.SolverReport:
    if algo not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algo!r}")
    variants, runner = ALGORITHMS[algo]
    if inst.variant not in variants:
        raise UsageError(f"{algo} does not accept {inst.variant} instances")
    if algo in FIXED_K and inst.k != FIXED_K[algo]:
        raise UsageError(f"{algo} needs k={FIXED_K[algo]}")
    return runner(inst, args)


# ---------------------------------------------------------------- commands

def parse_k_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise UsageError(f"bad k range {text!r}") from exc
    if lo < 3 or hi < lo:
        raise UsageError(f"bad k range {text!r}")
    return list(range(lo, hi + 1))


def cmd_gen(args) -> int:
    inst = gen_random(args.n, args.k, args.variant, args.metric, args.seed, args.max_demand)
    text = serialize_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _read_instance(path: str) -> Instance:
    try:
        return parse_instance(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def cmd_solve(args) -> int:
    inst = _read_instance(args.input)
    t0 = time.perf_counter()
    rep = run_algorithm(inst, args.algo, args)
    elapsed = (time.perf_counter() - t0) * 1000
    check_itinerary(inst, rep.itinerary)
    opt = exact_cvrp(inst).optimum if args.oracle else None
    report = RunReport(inst.digest(), args.algo, args.seed, rep.weight, rep.certified_bound,
                       lb_instance(inst), opt, elapsed,
                       rep.weight / opt if opt else None)
    if args.format == "json":
        text = json.dumps(report.to_json(), indent=2)
    else:
        text = "\n".join(f"{k}: {v}" for k, v in report.to_json().items())
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_ratio_table(args) -> int:
    ks = parse_k_range(args.k)
    rows = table_report(args.variant, ks, args.alpha)
    if args.format == "json":
        payload = {"schema": SCHEMA, "variant": args.variant, "alpha": args.alpha,
                   "rows": {name: {str(k): sig(v) for k, v in row.items()} for name, row in rows.items()}}
        print(json.dumps(payload, indent=2))
    else:
        print(format_table(rows))
    return 0


# ---------------------------------------------------------------- verification

FAMILIES = ("agitp", "hritp", "exitp", "reuitp", "exuitp", "rules", "lp", "solvers")


def _tol(inst: Instance) -> float:
    return 1e-9 * max(1.0, float(np.max(inst.weights)))


def _refined_ratio(k: int, alpha: float = 1.5) -> float:
    r = k // 2 + 1
    return alpha + k / r - alpha / r


def solver_ratios(inst: Instance) -> dict[str, float]:
    """Solvers applicable to ``inst`` with the worst-case ratio each must meet."""
    k = inst.k
    out = {}
    if inst.variant in SPLIT_VARIANTS:
        out["split-final"] = ratio_split_final(k).value
        out["split-tradeoff"] = ratio_split_tradeoff(1.5, k).value
        out["portfolio-split"] = min(out.values())
        if k == 3:
            out["split3"] = 1.5
        if k == 4:
            out["split4-matching"] = 1.5
            out["split4-mod2"] = 5 / 3
    if inst.variant in UNSPLIT_VARIANTS:
        out["refined-uitp"] = _refined_ratio(k)
        out["portfolio-unsplit"] = _refined_ratio(k)
        special = {3: ("unsplit3", 1.5), 4: ("unsplit4", 1.75), 5: ("unsplit5", 2.157)}
        if k in special:
            name, ratio = special[k]
            out[name] = ratio
    return out


class _Defaults:
    gamma = None
    seed = 0


def verify_instance(inst: Instance, families=FAMILIES, fault: bool = False, seed: int = 0) -> list[str]:
    """Run every applicable check on one instance; return the violations."""
    problems: list[str] = []
    cap = inst.k - 1 if fault else inst.k
    tol = _tol(inst)

    def check(name, rep, customers=None):
        try:
            check_itinerary(inst, rep.itinerary, capacity=cap, customers=customers)
        except InfeasibleItinerary as exc:
            problems.append(f"{name}: infeasible ({exc})")
            return
        if rep.certified_bound is not None and rep.weight > rep.certified_bound + tol:
            problems.append(f"{name}: weight {rep.weight} above certified bound {rep.certified_bound}")

    splittable = inst.variant in SPLIT_VARIANTS
    unsplittable = inst.variant in UNSPLIT_VARIANTS
    if splittable and "agitp" in families:
        check("ag-itp", split.ag_itp(inst, split.hcs(inst)))
    if splittable and "hritp" in families and inst.n >= 2:
        check("hr-itp", split.hr_itp(inst, _customer_cycle(inst)))
    if splittable and "exitp" in families:
        check("ex-itp", _packing_run(inst))
        if inst.n >= 3:
            check("ex-itp/2-factor", split.ex_itp(inst, min_cycle_packing(inst.customers, inst.weights)))
    if unsplittable and "reuitp" in families:
        check("refined-uitp", unsplit.refined_ag_uitp(inst, split.hcs(inst)))
    small = [v for v in inst.customers if inst.demand(v) <= inst.k // 2]
    if unsplittable and "exuitp" in families and len(small) >= 3:
        packing = min_cycle_packing(small, inst.weights)
        check("ex-uitp", unsplit.ex_uitp(inst, packing), customers=small)
    if unsplittable and "rules" in families:
        _check_rules(inst, check)
    if unsplittable and "lp" in families:
        _check_lp(inst, check, problems, seed)
    if "solvers" in families:
        _check_solvers(inst, check, problems, seed)
    return problems


def _check_rules(inst: Instance, check):
    k, half = inst.k, inst.k // 2
    order = [v for v in split.hcs(inst).order if v]
    small = [v for v in order if inst.demand(v) <= half]
    prefix, load = [], 0
    for v in order:
        if load + inst.demand(v) <= k:
            prefix.append(v)
            load += inst.demand(v)
    cases = [("single", prefix)]
    if k >= 4 and sum(inst.demand(v) for v in small) > k:
        cases.append(("no_big", small))
    anchors = [v for v in order if inst.demand(v) == half + 1]
    if k >= 4 and anchors:
        cyc = [v for v in order if v in set(small) or v == anchors[0]]
        if sum(inst.demand(v) for v in cyc) > k:
            cases.append(("one_big", cyc))
    for rule, cyc in cases:
        if not cyc:
            continue
        tours, bound = unsplit.build_local_tours(inst, cyc, rule)
        it = Itinerary.build(tours, inst)
        check(f"rule {rule}", split.SolverReport(rule, it, bound), customers=cyc)


def _check_lp(inst: Instance, check, problems, seed):
    try:
        h = split.hcs(inst)
        zero = unsplit.lp_uitp(inst, h, 0.0, seed)
    except EnumerationLimit:
        return
    ref = unsplit.refined_ag_uitp(inst, h)
    if zero.itinerary != ref.itinerary or zero.weight != ref.weight:
        problems.append("lp-uitp: gamma=0 differs from refined partitioning")
    check("lp-uitp", unsplit.lp_uitp(inst, h, math.log(2), seed))
    if inst.n <= oracle_nmax():
        lp = zero.details["lp_objective"]
        opt = exact_cvrp(inst).optimum
        if lp > opt + _tol(inst) * inst.n:
            problems.append(f"lp: objective {lp} above optimum {opt}")


def _check_solvers(inst: Instance, check, problems, seed):
    args = _Defaults()
    args.seed = seed
    try:
        opt = exact_cvrp(inst).optimum
    except OracleTooLarge:
        opt = None
    tol = _tol(inst) * max(1, inst.n)
    if opt is not None and lb_instance(inst) > opt + tol:
        problems.append(f"lower bound {lb_instance(inst)} above optimum {opt}")
    for name, ratio in solver_ratios(inst).items():
        rep = run_algorithm(inst, name, args)
        check(name, rep)
        if opt is None:
            continue
        if rep.weight < opt - tol:
            problems.append(f"{name}: weight {rep.weight} below optimum {opt}")
        if rep.weight > ratio * opt + tol:
            problems.append(f"{name}: weight {rep.weight} above {ratio:.4f} x optimum {opt}")


def _verify_job(job):
    index, n, k, variant, metric, seed, families, fault = job
    max_demand = None
    if variant == "splittable":
        max_demand = max(1, oracle_nmax() // n)
    inst = gen_random(n, k, variant, metric, seed, max_demand)
    try:
        problems = verify_instance(inst, families, fault, seed)
    except Exception as exc:  # a crash is a violation too
        problems = [f"{type(exc).__name__}: {exc}"]
    return index, inst, problems


def cmd_verify(args) -> int:
    families = FAMILIES
    if args.lemma:
        families = tuple(f.strip() for f in args.lemma.split(","))
        unknown = [f for f in families if f not in FAMILIES]
        if unknown:
            raise UsageError(f"unknown check family {unknown}; choose from {', '.join(FAMILIES)}")
    ks = parse_k_range(args.k)
    rng = np.random.default_rng(args.seed)
    jobs = []
    for i in range(args.batch):
        n = int(rng.integers(1, args.n_max + 1))
        metric = METRICS[i % len(METRICS)]
        jobs.append((i, n, ks[i % len(ks)], args.variant, metric, args.seed * 1_000_003 + i,
                     families, args.inject_fault))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_verify_job, jobs))
    else:
        results = [_verify_job(j) for j in jobs]
    failures = 0
    replay_dir = Path(args.replay_dir)
    for index, inst, problems in sorted(results, key=lambda r: r[0]):
        if not problems:
            continue
        failures += 1
        replay_dir.mkdir(parents=True, exist_ok=True)
        path = replay_dir / f"replay-{index:05d}-{inst.digest()[:12]}.cvrp"
        path.write_text(serialize_instance(inst))
        for p in problems:
            print(f"instance {index} (n={inst.n}, k={inst.k}): {p}  [replay: {path}]")
    print(f"verified {len(results)} instances, {failures} with violations")
    return 1 if failures else 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcvrp", description="Approximation algorithms for k-CVRP.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--variant", choices=VARIANTS, default="unit")
    p.add_argument("--metric", choices=METRICS, default="euclidean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-demand", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one algorithm on an instance file")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="also compute the exact optimum")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ratio-table", help="print approximation ratios")
    p.add_argument("--variant", choices=("split", "unsplit"), required=True)
    p.add_argument("--k", default="3..10", help="single k or a range lo..hi")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.set_defaults(func=cmd_ratio_table)

    p = sub.add_parser("verify", help="check solvers on random instances")
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--k", default="3")
    p.add_argument("--variant", choices=VARIANTS, default="unit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lemma", default=None, help="comma-separated families: " + ", ".join(FAMILIES))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--replay-dir", default="verify-failures")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        if getattr(args, "n_max", 1) < 1 or getattr(args, "batch", 1) < 0:
            raise UsageError("--n-max must be positive and --batch nonnegative")
        return args.func(args)
    except (UsageError, InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, InfeasibleItinerary) as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
