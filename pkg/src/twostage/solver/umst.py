"""Universal accelerated method of similar triangles on ``t >= lower``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gap import duality_gap

__all__ = ["OracleOutput", "ConvergenceHistory", "UMSTResult", "umst_minimize"]


@dataclass
class OracleOutput:
    """Value and (sub)gradient returned by a first-order oracle.

    ``smooth_grad`` and ``flows`` split the gradient as
    ``grad = smooth_grad - flows`` for oracles that have that structure;
    their weighted averages give the primal estimate used by the gap.
    """

    value: float
    grad: np.ndarray
    smooth_grad: np.ndarray | None = None
    flows: np.ndarray | None = None
    demand: np.ndarray | None = None
    sweeps: int = 0
    exact: bool = True
    extra: dict = field(default_factory=dict)


@dataclass
class ConvergenceHistory:
    iteration: list = field(default_factory=list)
    value: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    lipschitz: list = field(default_factory=list)
    sinkhorn_sweeps: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)

    def append(self, iteration, value, gap, lipschitz, sweeps, elapsed):
        if self.iteration and iteration <= self.iteration[-1]:
            raise ValueError("iterations must be strictly increasing")
        self.iteration.append(int(iteration))
        self.value.append(float(value))
        self.gap.append(float(gap))
        self.lipschitz.append(float(lipschitz))
        self.sinkhorn_sweeps.append(int(sweeps))
        self.elapsed.append(float(elapsed))

    def __len__(self):
        return len(self.iteration)

    def gaps(self):
        """``(iterations, gaps)`` arrays restricted to evaluated gaps."""
        k = np.asarray(self.iteration)
        g = np.asarray(self.gap)
        ok = np.isfinite(g)
        return k[ok], g[ok]


@dataclass
class UMSTResult:
    x: np.ndarray
    output: OracleOutput
    history: ConvergenceHistory
    status: str
    gap: float
    iterations: int
    lipschitz: float
    flows_avg: np.ndarray | None = None
    demand_avg: np.ndarray | None = None


def _as_output(res):
    if isinstance(res, OracleOutput):
        return res
    value, grad = res
    return OracleOutput(float(value), np.asarray(grad, dtype=float))


def umst_minimize(oracle, t0, lower, eps, L0=1.0, max_iter=3000, free=None,
                  gap_every=10, stop_on_gap=True, gap_gradient="averaged",
                  max_backtracks=60, callback=None) -> UMSTResult:
    """Minimize a convex function over ``t >= lower``.

    ``oracle(t)`` returns an :class:`OracleOutput` or a ``(value, grad)``
    pair.  If it exposes ``set_iteration(k)`` that is called before each
    outer step (used to tighten inner tolerances).  Coordinates where
    ``free`` is False stay pinned at ``lower``.

    Each step solves ``L * alpha**2 = A + alpha``, forms the similar-triangle
    points and accepts once the inexact descent inequality with slack
    ``eps * alpha / (2 * A_new)`` holds, doubling ``L`` otherwise.  After
    acceptance the next trial starts from ``L / 2``.

    The gap is evaluated every ``gap_every`` steps at the current ``x``.
    With ``gap_gradient="averaged"`` and an oracle that reports
    ``smooth_grad``/``flows`` the gradient is ``smooth_grad(x) - <flows>``
    with ``<flows>`` the ``alpha``-weighted average of the oracle flows at
    the extrapolation points; otherwise ``grad(x)`` is used as is.

    The status is ``"converged"`` when the last evaluated gap is at most
    ``eps`` (with ``stop_on_gap=False`` the full ``max_iter`` steps are run
    regardless) and ``"iteration_cap"`` otherwise.

    ``callback(k, x, output, result_so_far)`` runs after each accepted step.
    """
    lower = np.asarray(lower, dtype=float)
    x = np.maximum(np.array(t0, dtype=float), lower)
    free = np.ones(x.shape, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    x[~free] = lower[~free]
    u = x.copy()
    start = x.copy()
    A = 0.0
    L = float(L0)
    history = ConvergenceHistory()
    clock = time.perf_counter()
    set_iteration = getattr(oracle, "set_iteration", None)

    def call(t):
        out = _as_output(oracle(t))
        if not (np.isfinite(out.value) and np.all(np.isfinite(out.grad))):
            raise FloatingPointError(f"oracle returned non-finite value/gradient at t={t!r}")
        out.grad = np.where(free, out.grad, 0.0)
        return out

    flows_avg = demand_avg = None
    out_x = None
    gap = math.inf
    status = "iteration_cap"
    k = 0
    for k in range(1, max_iter + 1):
        if set_iteration is not None:
            set_iteration(k)
        sweeps = 0
        for _ in range(max_backtracks):
            alpha = (1.0 + math.sqrt(1.0 + 4.0 * A * L)) / (2.0 * L)
            A_new = A + alpha
            y = (alpha * u + A * x) / A_new
            out_y = call(y)
            u_new = np.maximum(u - alpha * out_y.grad, lower)
            u_new[~free] = lower[~free]
            x_new = (alpha * u_new + A * x) / A_new
            out_new = call(x_new)
            sweeps += out_y.sweeps + out_new.sweeps
            step = x_new - y
            bound = (out_y.value + np.dot(out_y.grad, step) + 0.5 * L * np.dot(step, step)
                     + eps * alpha / (2.0 * A_new))
            if out_new.value <= bound:
                break
            L *= 2.0
        else:
            raise FloatingPointError(f"step {k}: no acceptable L after {max_backtracks} doublings")

        if out_y.flows is not None:
            flows_avg = (out_y.flows * alpha if flows_avg is None
                         else flows_avg + alpha * out_y.flows)
        if out_y.demand is not None:
            demand_avg = (out_y.demand * alpha if demand_avg is None
                          else demand_avg + alpha * out_y.demand)
        A, x, u, out_x = A_new, x_new, u_new, out_new
        accepted_L = L
        L = L / 2.0

        gap_now = math.nan
        if k % gap_every == 0 or k == max_iter:
            gap = gap_now = duality_gap(x, start, _gap_grad(out_x, flows_avg, A, free,
                                                            gap_gradient), lower)
        history.append(k, out_x.value, gap_now, accepted_L, sweeps,
                       time.perf_counter() - clock)
        if callback is not None:
            callback(k, x, out_x, dict(A=A, flows_avg=None if flows_avg is None else flows_avg / A,
                                      demand_avg=None if demand_avg is None else demand_avg / A))
        if stop_on_gap and np.isfinite(gap_now) and gap_now <= eps:
            status = "converged"
            break

    if status == "iteration_cap" and gap <= eps:
        status = "converged"
    return UMSTResult(
        x=x, output=out_x, history=history, status=status, gap=gap, iterations=k,
        lipschitz=L * 2.0,
        flows_avg=None if flows_avg is None else flows_avg / A,
        demand_avg=None if demand_avg is None else demand_avg / A)


def _gap_grad(out, flows_sum, A, free, mode):
    if mode == "averaged" and out.smooth_grad is not None and flows_sum is not None:
        g = out.smooth_grad - flows_sum / A
    elif mode in ("averaged", "pointwise"):
        g = out.grad
    else:
        raise ValueError(f"unknown gap_gradient {mode!r}")
    return np.where(free, g, 0.0)
