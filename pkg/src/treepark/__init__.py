"""Blocking random sequential adsorption ("parking") on random trees with i.i.d. degrees."""

from .analytic import AlphaSolver, regular_closed_form
from .degree_dist import (DegreeDistribution, gf_eval, make_custom, make_geometric_shifted,
                          make_regular, sample_degree)
from .dynamics import (ArrivalSchedule, Estimate, ParkOutcome, draw_arrivals,
                       estimate_conditional_vacancy, estimate_correlation,
                       estimate_root_occupancy, occupancy_at, run_rsa)
from .oracle import MasterEquationSystem, exact_correlation, exact_transient
from .tree_gen import (GrowthCapError, TreeInstance, regular_ball, sample_ball,
                       sample_rooted_half_tree)

__all__ = [
    "AlphaSolver", "ArrivalSchedule", "DegreeDistribution", "Estimate", "GrowthCapError",
    "MasterEquationSystem", "ParkOutcome", "TreeInstance", "draw_arrivals",
    "estimate_conditional_vacancy", "estimate_correlation", "estimate_root_occupancy",
    "exact_correlation", "exact_transient", "gf_eval", "make_custom", "make_geometric_shifted",
    "make_regular", "occupancy_at", "regular_closed_form", "regular_ball", "run_rsa",
    "sample_ball", "sample_degree", "sample_rooted_half_tree",
]
