"""Linearization gap over a ball intersected with a box."""
from __future__ import annotations

import numpy as np

__all__ = ["duality_gap", "ball_box_argmin"]


def ball_box_argmin(g, center, radius, lower, rtol=1e-12):
    """Minimize ``<g, t>`` over ``||t - center|| <= radius``, ``t >= lower``.

    The minimizer has the form ``max(center - s * g, lower)`` with ``s >= 0``
    chosen so the ball constraint is tight (or ``s = inf`` if it never
    becomes tight); ``s`` is found by bisection since the distance to the
    center is non-decreasing in ``s``.
    """
    g = np.asarray(g, dtype=float)
    center = np.asarray(center, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), center.shape)
    if radius <= 0 or not np.any(g):
        return center.copy()

    def point(s):
        return np.maximum(center - s * g, lower)

    def dist(s):
        return np.linalg.norm(point(s) - center)

    # As s -> inf only coordinates with g < 0 keep moving.
    if not np.any(g < 0):
        limit = np.where(g > 0, lower, center)
        if np.linalg.norm(limit - center) <= radius:
            return np.maximum(limit, lower)

    lo, hi = 0.0, radius / np.linalg.norm(g)
    while dist(hi) < radius:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if dist(mid) < radius:
            lo = mid
        else:
            hi = mid
    return point(lo)


def duality_gap(t_k, t_0, grad, lower) -> float:
    """``max <grad, t_k - t>`` over the ball of radius ``2 ||t_0 - t_k||``
    centered at ``t_k``, intersected with ``t >= lower``."""
    t_k = np.asarray(t_k, dtype=float)
    radius = 2.0 * np.linalg.norm(np.asarray(t_0, dtype=float) - t_k)
    if radius == 0:
        return 0.0
    t_min = ball_box_argmin(grad, t_k, radius, lower)
    return float(np.dot(grad, t_k - t_min))
