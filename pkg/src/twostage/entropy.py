"""Entropy-model trip distribution via log-domain Sinkhorn balancing.

All matrices live on the OD grid ``(n_origins, n_destinations)``; entries
outside the pair set carry ``T = inf`` and receive zero mass.  The demand
matrix ``d`` is normalized to unit total mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Potentials",
    "SinkhornInfo",
    "sanitize",
    "sinkhorn",
    "demand_from_potentials",
    "eval_entropy_dual",
    "marginal_error",
]


@dataclass(frozen=True)
class Potentials:
    """Multipliers of the origin (``lam``) and destination (``mu``) totals.

    Only defined up to an additive constant on each vector.
    """

    lam: np.ndarray
    mu: np.ndarray

    def shifted(self, c_lam=0.0, c_mu=0.0) -> "Potentials":
        return Potentials(self.lam + c_lam, self.mu + c_mu)


@dataclass(frozen=True)
class SinkhornInfo:
    sweeps: int
    error: float
    converged: bool


def _lse(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(s, axis=axis)


def _lse_fast(a, axis):
    # Every row/column holds a finite entry (checked in sinkhorn).
    m = a.max(axis=axis)
    if axis == 0:
        return np.log(np.exp(a - m).sum(axis=0)) + m
    return np.log(np.exp(a - m[:, None]).sum(axis=1)) + m


def sanitize(demand, T, eps_mass=1e-6, big_factor=10.0, t_big=None):
    """Make totals strictly positive and costs finite.

    Zero origin/destination totals are raised to ``eps_mass * total``, the
    mass being taken proportionally from the positive entries.  Infinite
    costs on admissible pairs become ``t_big`` (default ``big_factor`` times
    the largest finite admissible cost).  Returns ``(l, w, T)`` with ``l``
    and ``w`` normalized to unit sum.
    """
    total = float(demand.total)

    def lift(v):
        v = np.asarray(v, dtype=float).copy()
        zero = v <= 0
        if zero.any():
            moved = eps_mass * total * zero.sum()
            v[~zero] -= moved * v[~zero] / v[~zero].sum()
            v[zero] = eps_mass * total
        return v / total

    T = np.array(T, dtype=float)
    pairs = demand.pairs
    missing = pairs & ~np.isfinite(T)
    if missing.any():
        if t_big is None:
            finite = T[pairs & np.isfinite(T)]
            t_big = big_factor * (finite.max() if finite.size else 1.0)
        T[missing] = t_big
    T[~pairs] = np.inf
    return lift(demand.l), lift(demand.w), T


def _logits(T, pot, gamma):
    return (-T + pot.lam[:, None] + pot.mu[None, :]) / gamma


def demand_from_potentials(T, pot: Potentials, gamma: float) -> np.ndarray:
    """Softmax of ``(-T + lam_i + mu_j) / gamma`` over the OD grid."""
    z = _logits(np.asarray(T, dtype=float), pot, gamma)
    z = z - np.max(z)
    d = np.exp(z)
    return d / d.sum()


def eval_entropy_dual(T, pot: Potentials, gamma, l, w) -> float:
    """``gamma * logsumexp(logits) - <l, lam> - <w, mu>``."""
    z = _logits(np.asarray(T, dtype=float), pot, gamma).ravel()
    return float(gamma * _lse(z, 0) - np.dot(l, pot.lam) - np.dot(w, pot.mu))


def marginal_error(d, l, w) -> float:
    """``||row sums - l||_1 + ||column sums - w||_1``."""
    return float(np.abs(d.sum(axis=1) - l).sum() + np.abs(d.sum(axis=0) - w).sum())


def sinkhorn(T, l, w, gamma, tol=1e-9, max_iter=10_000, warm: Potentials | None = None,
             callback=None):
    """Minimize the entropy dual over the potentials by exact block updates.

    Each sweep sets ``mu`` so the column totals match ``w``, then ``lam`` so
    the row totals match ``l``.  Stops once the l1 marginal error of the
    normalized demand falls to ``tol``.  Returns ``(potentials, info)``; if
    ``max_iter`` sweeps were not enough ``info.converged`` is False and the
    last potentials are returned.

    ``callback(sweep, potentials)`` is invoked after every sweep.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    T = np.asarray(T, dtype=float)
    l = np.asarray(l, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(l <= 0) or np.any(w <= 0):
        raise ValueError("marginals must be strictly positive (see sanitize)")
    K = -T / gamma
    finite = np.isfinite(K)
    if not (finite.any(axis=0).all() and finite.any(axis=1).all()):
        raise ValueError("every origin and destination needs an admissible finite-cost pair")
    log_l, log_w = np.log(l), np.log(w)
    if warm is None:
        lam, mu = np.zeros(T.shape[0]), np.zeros(T.shape[1])
    else:
        lam, mu = np.array(warm.lam, dtype=float), np.array(warm.mu, dtype=float)

    # After a lam-step the row totals equal l exactly and the grand total is
    # 1, so the column totals of the normalized demand are
    # exp(mu/gamma + lse_col), where lse_col is also what the next mu-step
    # needs.  The stopping test therefore costs no extra pass.
    err = np.inf
    sweep = 0
    lse_col = _lse_fast(K + lam[:, None] / gamma, 0)
    while sweep < max_iter:
        sweep += 1
        mu = gamma * (log_w - lse_col)
        lam = gamma * (log_l - _lse_fast(K + mu[None, :] / gamma, 1))
        lse_col = _lse_fast(K + lam[:, None] / gamma, 0)
        err = float(np.abs(np.exp(mu / gamma + lse_col) - w).sum())
        if callback is not None:
            callback(sweep, Potentials(lam, mu))
        if err <= tol:
            # the row totals are exact only up to rounding; confirm on the
            # materialized demand before stopping
            pot = Potentials(lam, mu)
            err = marginal_error(demand_from_potentials(T, pot, gamma), l, w)
            if err <= tol:
                return pot, SinkhornInfo(sweep, err, True)
    return Potentials(lam, mu), SinkhornInfo(sweep, err, False)
