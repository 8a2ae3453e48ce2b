"""Tiny networks with known or brute-forceable equilibria."""
from __future__ import annotations

import numpy as np

from .link_cost import LinkParams
from .tntp_io import DemandSpec, Network, marginals

__all__ = [
    "single_link",
    "parallel_links",
    "triangle",
    "two_by_two",
    "path_network",
    "symmetric_two_route",
    "grid",
]


def _trips(zones, entries):
    m = np.zeros((zones, zones))
    for (i, j), v in entries.items():
        m[i - 1, j - 1] = v
    return m


def single_link(t0=10.0, kappa=0.15, capacity=2.0, power=4.0, trips=1.0):
    """One link 1 -> 2 carrying a single OD pair.

    With the defaults the equilibrium is ``f = 1``, ``t = 10.09375``.
    """
    net = Network(2, [0], [1], LinkParams([t0], [capacity], [kappa], [power]))
    return net, marginals(_trips(2, {(1, 2): trips}))


def parallel_links(t0=(1.0, 2.0), capacity=(1.0, 2.0), kappa=1.0, power=1.0, trips=3.0):
    """Two parallel links 1 -> 2 with linear costs.

    The default capacities give the split ``(2, 1)`` at common time 3.
    With ``capacity=(1, 1)`` the split is ``(7/3, 2/3)`` at time ``10/3``.
    """
    links = LinkParams(np.asarray(t0, float), np.asarray(capacity, float), kappa, power)
    net = Network(2, [0, 0], [1, 1], links)
    return net, marginals(_trips(2, {(1, 2): trips}))


def triangle():
    """Three zones joined both ways; four OD pairs; every pair has two routes."""
    tail = [0, 1, 0, 2, 1, 2]
    head = [1, 0, 2, 0, 2, 1]
    links = LinkParams(
        free_flow_time=[2.0, 2.0, 1.5, 1.5, 1.0, 1.0],
        capacity=[10.0, 12.0, 8.0, 15.0, 10.0, 10.0],
        kappa=1.0, power=2.0)
    net = Network(3, tail, head, links, zone_count=3, first_thru_node=1)
    trips = _trips(3, {(1, 2): 20.0, (2, 1): 10.0, (3, 1): 15.0, (3, 2): 15.0})
    return net, marginals(trips)


def two_by_two():
    """Origins 1, 2 and destinations 3, 4 sharing a hub node 5.

    Four OD pairs with one degree of freedom in the trip matrix, so the
    entropy term matters; centroids 1-4 cannot be passed through.
    """
    tail = [0, 1, 0, 1, 4, 4]
    head = [2, 3, 4, 4, 2, 3]
    links = LinkParams(
        free_flow_time=[3.0, 3.0, 1.0, 1.0, 1.0, 1.0],
        capacity=[10.0, 10.0, 20.0, 20.0, 15.0, 15.0],
        kappa=0.5, power=2.0)
    net = Network(5, tail, head, links, zone_count=4, first_thru_node=5)
    trips = _trips(4, {(1, 3): 10.0, (1, 4): 5.0, (2, 3): 5.0, (2, 4): 10.0})
    return net, marginals(trips)


def path_network(times=(1.0, 2.0)):
    """Chain 1 -> 2 -> ... with the given free-flow times and no congestion."""
    n = len(times) + 1
    links = LinkParams(np.asarray(times, float), np.ones(len(times)), 0.0, 1.0)
    return Network(n, np.arange(n - 1), np.arange(1, n), links)


def symmetric_two_route(trips=10.0):
    """Zones 1, 2 linked by two identical routes in each direction via
    nodes 3 and 4; symmetric demand."""
    tail = [0, 2, 0, 3, 1, 2, 1, 3]
    head = [2, 1, 3, 1, 2, 0, 3, 0]
    links = LinkParams(np.full(8, 1.0), np.full(8, 5.0), 0.5, 2.0)
    net = Network(4, tail, head, links, zone_count=2, first_thru_node=3)
    return net, marginals(_trips(2, {(1, 2): trips, (2, 1): trips}))


def grid(seed, size=3, capacity=(50.0, 150.0)):
    """Random ``size x size`` street grid with two-way links and a zone at
    each corner.

    Free-flow times are uniform on ``[1, 3]``, capacities uniform on
    ``capacity``, BPR ``kappa = 0.15`` and power 4; each ordered pair of
    corners gets uniform ``[5, 20]`` trips.  Corners are ordinary nodes
    here, so routes may pass through them.
    """
    rng = np.random.default_rng(seed)
    tail, head = [], []
    for i in range(size):
        for j in range(size):
            u = i * size + j
            if j + 1 < size:
                tail += [u, u + 1]
                head += [u + 1, u]
            if i + 1 < size:
                tail += [u, u + size]
                head += [u + size, u]
    m = len(tail)
    links = LinkParams(rng.uniform(1.0, 3.0, m), rng.uniform(*capacity, m), 0.15, 4.0)
    n = size * size
    net = Network(n, tail, head, links)
    corners = [0, size - 1, n - size, n - 1]
    trips = np.zeros((n, n))
    for a in corners:
        for b in corners:
            if a != b:
                trips[a, b] = rng.uniform(5.0, 20.0)
    return net, marginals(trips)


def demand_spec(origins, destinations, l, w, pairs=None) -> DemandSpec:
    """Hand-built :class:`DemandSpec` (0-based zone ids)."""
    origins = np.asarray(origins)
    destinations = np.asarray(destinations)
    if pairs is None:
        pairs = origins[:, None] != destinations[None, :]
    l = np.asarray(l, float)
    w = np.asarray(w, float)
    return DemandSpec(origins, destinations, np.asarray(pairs, bool), l, w, float(l.sum()))
