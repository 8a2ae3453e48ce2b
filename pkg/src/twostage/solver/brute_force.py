"""Direct primal solve of the coupled problem on tiny instances.

Enumerates every simple path of every OD pair and minimizes

    sum_e sigma_e(f_e) + gamma * total * sum_ij d_ij ln d_ij

over path flows ``x >= 0`` with ``f = Theta x``, ``d_ij = sum_{p in P_ij}
x_p / total`` and ``d`` matching the origin/destination totals.  It never
touches shortest paths, potentials or ``F(t)``, which makes it a test oracle
for the dual route.
"""
from __future__ import annotations

import numpy as np

__all__ = ["simple_paths", "brute_force_oracle", "MAX_LINKS", "MAX_PAIRS"]

MAX_LINKS = 8
MAX_PAIRS = 4


def simple_paths(network, origin, dest):
    """All simple paths ``origin -> dest`` as lists of link ids.

    Centroids other than the endpoints are not used as intermediate nodes.
    """
    paths = []

    def walk(node, visited, links):
        if node == dest:
            paths.append(list(links))
            return
        if node != origin and network.is_centroid(node):
            return
        for e in network.out_links[node]:
            v = int(network.head[e])
            if v not in visited:
                visited.add(v)
                links.append(e)
                walk(v, visited, links)
                links.pop()
                visited.remove(v)

    walk(origin, {origin}, [])
    return paths


def brute_force_oracle(network, demand, gamma, total=None, trips=None, solver="CLARABEL"):
    """Return ``(d, f)``: trips (vehicles, OD grid) and link flows.

    With ``trips`` given the trip matrix is held fixed and only the route
    split is optimized (plain Beckmann problem).
    """
    import cvxpy as cp

    if network.link_count > MAX_LINKS or demand.pair_count > MAX_PAIRS:
        raise ValueError(f"brute force is limited to {MAX_LINKS} links and {MAX_PAIRS} pairs")
    total = float(demand.total if total is None else total)
    pair_idx = [tuple(ab) for ab in np.argwhere(demand.pairs)]
    path_sets = []
    for a, b in pair_idx:
        ps = simple_paths(network, int(demand.origins[a]), int(demand.destinations[b]))
        if not ps:
            raise ValueError(f"pair ({demand.origins[a] + 1}, {demand.destinations[b] + 1}) "
                             "has no path")
        path_sets.append(ps)
    all_paths = [p for ps in path_sets for p in ps]
    theta = np.zeros((network.link_count, len(all_paths)))
    for k, p in enumerate(all_paths):
        theta[p, k] = 1.0
    member = np.zeros((len(pair_idx), len(all_paths)))
    k = 0
    for i, ps in enumerate(path_sets):
        member[i, k:k + len(ps)] = 1.0
        k += len(ps)

    x = cp.Variable(len(all_paths), nonneg=True)
    f = theta @ x
    links = network.links
    t0, cap, kap, pw = (links.free_flow_time, links.capacity, links.kappa, links.power)
    beckmann = t0 @ f
    for e in np.flatnonzero(kap > 0):
        coef = t0[e] * kap[e] * cap[e] / (1.0 + pw[e])
        beckmann = beckmann + coef * cp.power(f[e] / cap[e], 1.0 + float(pw[e]))
    od = member @ x / total
    cons = []
    if trips is not None:
        fixed = np.array([trips[a, b] for a, b in pair_idx], dtype=float)
        cons.append(member @ x == fixed)
        objective = beckmann
    else:
        rows = np.zeros((len(demand.origins), len(pair_idx)))
        cols = np.zeros((len(demand.destinations), len(pair_idx)))
        for i, (a, b) in enumerate(pair_idx):
            rows[a, i] = cols[b, i] = 1.0
        cons += [rows @ od == demand.l / demand.total, cols @ od == demand.w / demand.total]
        objective = beckmann - gamma * total * cp.sum(cp.entr(od))
    prob = cp.Problem(cp.Minimize(objective), cons)
    prob.solve(solver=solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"brute force solve failed: {prob.status}")

    xv = np.maximum(x.value, 0.0)
    d = np.zeros(demand.shape)
    for i, (a, b) in enumerate(pair_idx):
        d[a, b] = member[i] @ xv
    return d, theta @ xv
