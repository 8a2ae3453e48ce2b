"""Equilibria of the two-stage (trip distribution + route assignment) model.

The coupled fixed point is found by minimizing a convex function of the
link times; trip distribution is an entropy model solved by Sinkhorn
balancing and route choice is Wardrop/Beckmann with BPR link costs.
"""
from . import entropy, link_cost, shortest_paths, tntp_io
from .link_cost import LinkParams, bpr_inverse, bpr_time, sigma, sigma_conj
from .solver import (
    SolverConfig,
    baseline_alternation,
    solve_fixed_demand,
    solve_two_stage,
)
from .tntp_io import DemandSpec, Network, marginals, read_net, read_trips, sioux_falls_paths

__version__ = "0.1.0"

__all__ = [
    "DemandSpec",
    "LinkParams",
    "Network",
    "SolverConfig",
    "baseline_alternation",
    "bpr_inverse",
    "bpr_time",
    "entropy",
    "link_cost",
    "marginals",
    "read_net",
    "read_trips",
    "shortest_paths",
    "sigma",
    "sigma_conj",
    "sioux_falls_paths",
    "solve_fixed_demand",
    "solve_two_stage",
    "tntp_io",
]
