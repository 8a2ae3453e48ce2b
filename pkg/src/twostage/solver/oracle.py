"""Value/gradient oracles for the dual objective in link times.

Two-stage objective::

    F(t) = total * D(t, lam(t), mu(t)) + sum_e sigma*_e(t_e)
    grad F(t) = tau^-1(t) - AON(total * d(t))

Fixed-demand objective (Beckmann dual, demand ``q`` in vehicles)::

    F(t) = -<q, T(t)> + sum_e sigma*_e(t_e)
    grad F(t) = tau^-1(t) - AON(q)
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..entropy import demand_from_potentials, eval_entropy_dual, sanitize, sinkhorn
from ..link_cost import bpr_inverse, sigma_conj
from ..shortest_paths import aon_assign, cost_matrix
from .umst import OracleOutput

__all__ = ["SolverConfig", "TwoStageOracle", "FixedDemandOracle", "free_flow_costs"]

MODES = ("two_stage", "fixed_demand", "baseline")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings; ``None`` fields are filled in by :meth:`resolve`.

    gamma
        Entropy temperature in cost units.  Default: ``gamma_factor`` times
        the mean free-flow shortest-path cost over the OD pairs.
    eps
        Target gap.  Default: ``eps_factor * total * mean(free_flow_time)``.
    inner_c0, inner_tol_min
        Sinkhorn tolerance at outer step k is
        ``max(inner_tol_min, inner_c0 / (k + 1)**2)``.
    gap_every
        Evaluate the gap every this many outer steps.
    """

    gamma: float | None = None
    eps: float | None = None
    max_iter: int = 3000
    L0: float = 1.0
    total: float | None = None
    mode: str = "two_stage"
    inner_c0: float = 1e-3
    inner_tol_min: float = 1e-9
    sinkhorn_max_iter: int = 10_000
    warm_start: bool = True
    gap_every: int = 10
    stop_on_gap: bool = True
    gap_gradient: str = "averaged"
    eps_mass: float = 1e-6
    big_factor: float = 10.0
    gamma_factor: float = 0.05
    eps_factor: float = 1e-5
    baseline_passes: int = 50
    baseline_tol: float = 1e-4
    baseline_window: int = 5
    baseline_inner_iter: int = 500

    def __post_init__(self):
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.L0 > 0:
            raise ValueError("L0 must be > 0")
        if self.max_iter < 1 or self.gap_every < 1:
            raise ValueError("max_iter and gap_every must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def resolve(self, network, demand, total=None) -> "SolverConfig":
        """Copy with ``gamma``, ``eps`` and ``total`` materialized."""
        total = self.total if self.total is not None else (
            demand.total if total is None else total)
        gamma = self.gamma
        if gamma is None:
            T, _ = cost_matrix(network, network.links.free_flow_time, demand)
            finite = T[demand.pairs & np.isfinite(T)]
            gamma = self.gamma_factor * float(finite.mean()) if finite.size else 1.0
        eps = self.eps
        if eps is None:
            eps = self.eps_factor * max(float(total), 1.0) * float(
                np.mean(network.links.free_flow_time))
        return self.replace(gamma=float(gamma), eps=float(eps), total=float(total))

    def inner_tol(self, k: int) -> float:
        return max(self.inner_tol_min, self.inner_c0 / (k + 1) ** 2)


def free_flow_costs(network, demand):
    return cost_matrix(network, network.links.free_flow_time, demand)[0]


class _LinkPart:
    def __init__(self, network):
        self.network = network
        self.links = network.links
        self.free = network.links.congestible
        self.lower = network.links.free_flow_time

    def link_terms(self, t):
        conj = float(np.sum(sigma_conj(self.links, t)))
        inv = np.where(self.free, bpr_inverse(self.links, t), 0.0)
        return conj, inv


class TwoStageOracle(_LinkPart):
    """``F(t)`` of the coupled distribution/assignment problem.

    Keeps the last Sinkhorn potentials as a warm start when
    ``cfg.warm_start`` is set.  ``cfg`` must be resolved.
    """

    def __init__(self, network, demand, cfg: SolverConfig):
        super().__init__(network)
        if cfg.gamma is None or cfg.total is None:
            raise ValueError("config must be resolved (call cfg.resolve)")
        self.demand = demand
        self.cfg = cfg
        self.gamma = cfg.gamma
        self.total = cfg.total
        self.potentials = None
        self.tol = cfg.inner_tol(0)
        T0 = free_flow_costs(network, demand)
        finite = T0[demand.pairs & np.isfinite(T0)]
        self.t_big = cfg.big_factor * (finite.max() if finite.size else 1.0)
        self.calls = 0

    def set_iteration(self, k):
        self.tol = self.cfg.inner_tol(k)

    def distribution(self, t):
        """Costs, sanitized marginals, potentials and normalized demand at ``t``."""
        T, trees = cost_matrix(self.network, t, self.demand)
        l, w, Ts = sanitize(self.demand, T, self.cfg.eps_mass, t_big=self.t_big)
        warm = self.potentials if self.cfg.warm_start else None
        pot, info = sinkhorn(Ts, l, w, self.gamma, tol=self.tol,
                             max_iter=self.cfg.sinkhorn_max_iter, warm=warm)
        self.potentials = pot
        d = demand_from_potentials(Ts, pot, self.gamma)
        return T, Ts, trees, l, w, pot, info, d

    def __call__(self, t) -> OracleOutput:
        self.calls += 1
        t = np.asarray(t, dtype=float)
        T, Ts, trees, l, w, pot, info, d = self.distribution(t)
        reachable = np.isfinite(T)
        flows = aon_assign(self.network, trees, self.total * np.where(reachable, d, 0.0),
                           self.demand.destinations)
        conj, inv = self.link_terms(t)
        value = self.total * eval_entropy_dual(Ts, pot, self.gamma, l, w) + conj
        grad = np.where(self.free, inv - flows, 0.0)
        return OracleOutput(value, grad, smooth_grad=inv, flows=flows, demand=d,
                            sweeps=info.sweeps, exact=info.converged,
                            extra=dict(T=T, potentials=pot, marginal_error=info.error))


class FixedDemandOracle(_LinkPart):
    """``F(t)`` of the Beckmann problem for a fixed trip matrix ``trips``."""

    def __init__(self, network, demand, trips):
        super().__init__(network)
        self.demand = demand
        self.trips = np.where(demand.pairs, np.asarray(trips, dtype=float), 0.0)
        if np.any(self.trips < 0):
            raise ValueError("trips must be non-negative")
        self.calls = 0

    def __call__(self, t) -> OracleOutput:
        self.calls += 1
        t = np.asarray(t, dtype=float)
        T, trees = cost_matrix(self.network, t, self.demand)
        flows = aon_assign(self.network, trees, self.trips, self.demand.destinations)
        used = self.trips > 0
        conj, inv = self.link_terms(t)
        value = -float(np.sum(self.trips[used] * T[used])) + conj
        grad = np.where(self.free, inv - flows, 0.0)
        return OracleOutput(value, grad, smooth_grad=inv, flows=flows, extra=dict(T=T))
