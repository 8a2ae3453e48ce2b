"""Solve modes: coupled two-stage equilibrium, fixed-demand assignment and
the block-alternation baseline."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..entropy import Potentials, demand_from_potentials, sanitize, sinkhorn
from ..link_cost import bpr_inverse, sigma
from ..shortest_paths import cost_matrix
from .gap import duality_gap
from .oracle import FixedDemandOracle, SolverConfig, TwoStageOracle
from .umst import ConvergenceHistory, umst_minimize

__all__ = [
    "EquilibriumResult",
    "solve_two_stage",
    "solve_fixed_demand",
    "baseline_alternation",
    "primal_value",
    "fixed_point_residual",
]

log = logging.getLogger(__name__)


@dataclass
class EquilibriumResult:
    """Outcome of a solve.

    ``times`` are link times.  ``flows`` is the primal estimate: the
    step-weighted average of the all-or-nothing flows seen by the method.
    ``flows_implied`` is ``tau^-1(times)`` on congestible links (equal to
    ``flows`` on constant-cost links); the two agree at an exact solution
    and their distance is the fixed-point residual.  ``demand`` is the
    normalized trip matrix on the OD grid.
    """

    times: np.ndarray
    flows: np.ndarray
    flows_implied: np.ndarray
    demand: np.ndarray
    total: float
    history: ConvergenceHistory
    status: str
    gap: float
    iterations: int
    config: SolverConfig
    potentials: Potentials | None = None
    demand_avg: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def demand_vehicles(self) -> np.ndarray:
        return self.total * self.demand

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _flows_at(network, t, assigned):
    free = network.links.congestible
    return np.where(free, bpr_inverse(network.links, t), assigned)


def solve_two_stage(network, demand, cfg: SolverConfig | None = None, t0=None,
                    callback=None) -> EquilibriumResult:
    """Coupled equilibrium by minimizing ``F(t)`` from ``t0`` (default free flow)."""
    cfg = (cfg or SolverConfig()).resolve(network, demand)
    oracle = TwoStageOracle(network, demand, cfg)
    lower = network.links.free_flow_time
    res = umst_minimize(oracle, lower if t0 is None else t0, lower, cfg.eps, L0=cfg.L0,
                        max_iter=cfg.max_iter, free=oracle.free, gap_every=cfg.gap_every,
                        stop_on_gap=cfg.stop_on_gap, gap_gradient=cfg.gap_gradient,
                        callback=callback)
    out = res.output
    log.info("two-stage: %s after %d steps, gap %.3g (eps %.3g)",
             res.status, res.iterations, res.gap, cfg.eps)
    return EquilibriumResult(
        times=res.x, flows=res.flows_avg,
        flows_implied=_flows_at(network, res.x, res.flows_avg), demand=out.demand, total=cfg.total,
        history=res.history, status=res.status, gap=res.gap, iterations=res.iterations,
        config=cfg, potentials=out.extra["potentials"], demand_avg=res.demand_avg,
        info=dict(oracle_calls=oracle.calls, lipschitz=res.lipschitz))


def solve_fixed_demand(network, demand, cfg: SolverConfig | None = None, trips=None,
                       t0=None, callback=None) -> EquilibriumResult:
    """Wardrop equilibrium for a fixed trip matrix (vehicles, OD grid).

    ``trips`` defaults to ``demand.reference``.
    """
    trips = demand.reference if trips is None else np.asarray(trips, dtype=float)
    if trips is None:
        raise ValueError("no trip matrix given and demand has no reference matrix")
    trips = np.where(demand.pairs, trips, 0.0)
    total = float(trips.sum())
    cfg = (cfg or SolverConfig(mode="fixed_demand")).resolve(network, demand, total=total)
    oracle = FixedDemandOracle(network, demand, trips)
    lower = network.links.free_flow_time
    res = umst_minimize(oracle, lower if t0 is None else t0, lower, cfg.eps, L0=cfg.L0,
                        max_iter=cfg.max_iter, free=oracle.free, gap_every=cfg.gap_every,
                        stop_on_gap=cfg.stop_on_gap, gap_gradient=cfg.gap_gradient,
                        callback=callback)
    d = trips / total if total > 0 else np.zeros_like(trips)
    return EquilibriumResult(
        times=res.x, flows=res.flows_avg,
        flows_implied=_flows_at(network, res.x, res.flows_avg), demand=d, total=total, history=res.history,
        status=res.status, gap=res.gap, iterations=res.iterations, config=cfg,
        info=dict(oracle_calls=oracle.calls, lipschitz=res.lipschitz))


def baseline_alternation(network, demand, cfg: SolverConfig | None = None,
                         callback=None) -> EquilibriumResult:
    """Alternate the two blocks: distribute trips on current costs, then
    assign them to equilibrium, and repeat.

    Each pass records the l1 change of the normalized demand and the
    relative l1 change of link flows.  Converged once both are below
    ``cfg.baseline_tol``; diverged when the demand change is no smaller
    than it was ``cfg.baseline_window`` passes earlier.
    """
    cfg = (cfg or SolverConfig(mode="baseline")).resolve(network, demand)
    gamma, total = cfg.gamma, cfg.total
    inner = cfg.replace(max_iter=cfg.baseline_inner_iter, mode="fixed_demand")
    evaluator = TwoStageOracle(network, demand, cfg.replace(inner_c0=0.0))
    lower = network.links.free_flow_time
    t = lower.copy()
    pot = None
    d_prev = f_prev = None
    d_changes, f_changes = [], []
    history = ConvergenceHistory()
    clock = time.perf_counter()
    status = "iteration_cap"
    fixed = None
    p = 0
    for p in range(1, cfg.baseline_passes + 1):
        T, _ = cost_matrix(network, t, demand)
        l, w, Ts = sanitize(demand, T, cfg.eps_mass, t_big=evaluator.t_big)
        pot, info = sinkhorn(Ts, l, w, gamma, tol=cfg.inner_tol_min,
                             max_iter=cfg.sinkhorn_max_iter, warm=pot)
        d = demand_from_potentials(Ts, pot, gamma)
        trips = total * np.where(np.isfinite(T), d, 0.0)
        # Started from free flow: the gap ball is centred on the distance
        # from the start, which a warm start would shrink to nothing.
        fixed = solve_fixed_demand(network, demand, inner, trips=trips)
        t = fixed.times
        f = fixed.flows

        d_change = np.inf if d_prev is None else float(np.abs(d - d_prev).sum())
        f_change = np.inf if f_prev is None else float(
            np.abs(f - f_prev).sum() / max(np.abs(f).sum(), 1.0))
        d_changes.append(d_change)
        f_changes.append(f_change)
        d_prev, f_prev = d, f

        out = evaluator(t)
        gap = duality_gap(t, lower, out.grad, lower)
        history.append(p, out.value, gap, np.nan, info.sweeps, time.perf_counter() - clock)
        log.info("baseline pass %d: d change %.3g, f change %.3g, inner %s",
                 p, d_change, f_change, fixed.status)
        if callback is not None:
            callback(p, t, d)
        if d_change <= cfg.baseline_tol and f_change <= cfg.baseline_tol:
            status = "converged"
            break
        w_ = cfg.baseline_window
        if p > w_ and d_change >= d_changes[p - 1 - w_]:
            status = "diverged"
            break

    return EquilibriumResult(
        times=t, flows=f, flows_implied=fixed.flows_implied, demand=d,
        total=total, history=history, status=status, gap=history.gap[-1], iterations=p,
        config=cfg, potentials=pot,
        info=dict(d_changes=d_changes, f_changes=f_changes))


def primal_value(network, flows, d, gamma, total) -> float:
    """Beckmann cost of ``flows`` plus ``gamma * total * sum d ln d``."""
    d = np.asarray(d, dtype=float)
    pos = d > 0
    return float(np.sum(sigma(network.links, flows))
                 + gamma * total * np.sum(d[pos] * np.log(d[pos])))


def fixed_point_residual(network, result: EquilibriumResult) -> float:
    """``||tau^-1(t) - f|| / max(1, ||f||)`` on congestible links."""
    free = network.links.congestible
    implied = np.asarray(bpr_inverse(network.links, result.times))[free]
    assigned = result.flows[free]
    return float(np.linalg.norm(implied - assigned) / max(1.0, np.linalg.norm(assigned)))
