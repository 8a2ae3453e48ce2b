"""BPR link performance functions and their convex-analytic companions.

For a link with free-flow time ``t0``, capacity ``cap``, coefficient
``kappa`` and exponent ``p`` the travel time is::

    tau(f) = t0 * (1 + kappa * (f / cap) ** p)

``sigma`` is the Beckmann integral of ``tau``, ``sigma_conj`` its convex
conjugate on ``[t0, inf)`` and ``bpr_inverse`` the derivative of the
conjugate.  Every function broadcasts over numpy arrays, so a
:class:`LinkParams` can describe one link or a whole network.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "LinkParams",
    "bpr_time",
    "bpr_inverse",
    "sigma",
    "sigma_conj",
]

# t in [t0 * (1 - BOUNDARY_RTOL), t0] is treated as t0.
BOUNDARY_RTOL = 1e-12


class DomainError(ValueError):
    """Raised when a flow or a time lies outside the function domain."""


@dataclass(frozen=True)
class LinkParams:
    """BPR parameters of one link or of a vector of links.

    Parameters
    ----------
    free_flow_time : float or array_like
        Travel time on an empty link, strictly positive.
    capacity : float or array_like
        Practical capacity, strictly positive.
    kappa : float or array_like, optional
        Congestion coefficient (TNTP column ``b``), non-negative.
    power : float or array_like, optional
        Exponent of the flow/capacity ratio (TNTP column ``power``), >= 1.
    """

    free_flow_time: np.ndarray
    capacity: np.ndarray
    kappa: np.ndarray = 0.15
    power: np.ndarray = 4.0

    def __post_init__(self):
        arrays = np.broadcast_arrays(
            *(np.asarray(v, dtype=float) for v in
              (self.free_flow_time, self.capacity, self.kappa, self.power)))
        for name, arr in zip(("free_flow_time", "capacity", "kappa", "power"), arrays):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.free_flow_time) & (self.free_flow_time > 0)):
            raise ValueError("free_flow_time must be finite and > 0")
        if not np.all(np.isfinite(self.capacity) & (self.capacity > 0)):
            raise ValueError("capacity must be finite and > 0")
        if not np.all(np.isfinite(self.kappa) & (self.kappa >= 0)):
            raise ValueError("kappa must be finite and >= 0")
        if not np.all(np.isfinite(self.power) & (self.power >= 1)):
            raise ValueError("power must be finite and >= 1")

    def __len__(self):
        return self.free_flow_time.size

    @property
    def congestible(self) -> np.ndarray:
        """Mask of links whose time responds to flow (``kappa > 0``)."""
        return self.kappa > 0

    def subset(self, index) -> "LinkParams":
        return LinkParams(self.free_flow_time[index], self.capacity[index],
                          self.kappa[index], self.power[index])


def _check_flow(f):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise DomainError("flow must be finite and non-negative")
    return f


def _check_time(link, t):
    t = np.asarray(t, dtype=float)
    t0 = link.free_flow_time
    if not np.all(np.isfinite(t)):
        raise DomainError("time must be finite")
    if np.any(t < t0 * (1 - BOUNDARY_RTOL)):
        raise DomainError("time below free-flow time is outside dom sigma*")
    return np.maximum(t, t0)


def _scalar(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def bpr_time(link: LinkParams, f):
    """Travel time ``tau(f)`` at flow ``f``."""
    f = _check_flow(f)
    ratio = f / link.capacity
    return _scalar(link.free_flow_time * (1.0 + link.kappa * ratio ** link.power))


def bpr_inverse(link: LinkParams, t):
    """Flow at which the travel time equals ``t``.

    Links with ``kappa == 0`` have a set-valued inverse; 0 is returned for
    them (the solver keeps such links at their free-flow time).
    """
    t = _check_time(link, t)
    t0, kappa = link.free_flow_time, link.kappa
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = (t - t0) / (t0 * kappa)
        f = link.capacity * excess ** (1.0 / link.power)
    return _scalar(np.where(kappa > 0, f, 0.0))


def sigma(link: LinkParams, f):
    """Beckmann integral ``int_0^f tau(z) dz``."""
    f = _check_flow(f)
    t0, cap, p = link.free_flow_time, link.capacity, link.power
    return _scalar(t0 * f + t0 * link.kappa * cap / (1.0 + p) * (f / cap) ** (1.0 + p))


def sigma_conj(link: LinkParams, t):
    """Convex conjugate ``max_{f >= 0} f t - sigma(f)`` for ``t >= t0``."""
    t = _check_time(link, t)
    t0, kappa, q = link.free_flow_time, link.kappa, 1.0 / link.power
    with np.errstate(divide="ignore", invalid="ignore"):
        val = link.capacity * (t - t0) ** (q + 1) / ((q + 1) * (kappa * t0) ** q)
    return _scalar(np.where(kappa > 0, val, 0.0))
