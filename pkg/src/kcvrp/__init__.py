"""Approximation algorithms for the capacitated vehicle routing problem with capacity k."""

from .instance import (Instance, InstanceError, InfeasibleItinerary, Itinerary, Tour,
                       check_itinerary, gen_random, parse_instance, serialize_instance)
from .split_solvers import (SolverReport, ag_itp, ex_itp, hr_itp, portfolio_split, split3,
                            split4_matching, split4_mod2, split_final, split_tradeoff)
from .unsplit_solvers import (build_local_tours, ex_uitp, lp_uitp, refined_ag_uitp, unsplit3,
                              unsplit4, unsplit5, unsplit_portfolio)
from .oracle import exact_cvrp

__all__ = [
    "Instance", "InstanceError", "InfeasibleItinerary", "Itinerary", "Tour",
    "check_itinerary", "gen_random", "parse_instance", "serialize_instance",
    "SolverReport", "ag_itp", "ex_itp", "hr_itp", "portfolio_split", "split3",
    "split4_matching", "split4_mod2", "split_final", "split_tradeoff",
    "build_local_tours", "ex_uitp", "lp_uitp", "refined_ag_uitp", "unsplit3",
    "unsplit4", "unsplit5", "unsplit_portfolio", "exact_cvrp",
]
