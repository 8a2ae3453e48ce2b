"""Single-source shortest paths and all-or-nothing loading.

Dijkstra with a binary heap and lazy deletion.  Heap entries are
``(distance, node)`` so ties in distance pop the lower node id first, and a
label is only replaced on strict improvement; together this makes trees
(and therefore the subgradients built from them) reproducible.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ShortestPathTree", "sssp", "cost_matrix", "aon_assign"]


@dataclass(frozen=True, eq=False)
class ShortestPathTree:
    """Distances and predecessor links from one origin.

    ``pred[v]`` is the id of the last link on the tree path to ``v`` or -1;
    ``order`` lists reachable nodes in the order they were settled.
    """

    origin: int
    dist: np.ndarray
    pred: np.ndarray
    order: np.ndarray


def sssp(network, t, origin: int) -> ShortestPathTree:
    """Shortest path tree from ``origin`` under link costs ``t``.

    Centroids other than the origin are settled but never expanded.
    Unreachable nodes get ``inf`` distance.
    """
    n = network.node_count
    if not 0 <= origin < n:
        raise ValueError(f"origin {origin} out of range")
    cost = t.tolist() if isinstance(t, np.ndarray) else list(t)
    head = network.head.tolist()
    out_links = network.out_links
    n_centroids = max(network.first_thru_node - 1, 0)

    dist = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    order = []
    dist[origin] = 0.0
    heap = [(0.0, origin)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        order.append(u)
        if u < n_centroids and u != origin:
            continue
        for e in out_links[u]:
            v = head[e]
            dv = du + cost[e]
            if dv < dist[v]:
                dist[v] = dv
                pred[v] = e
                heapq.heappush(heap, (dv, v))
    return ShortestPathTree(origin, np.array(dist), np.array(pred, dtype=np.intp),
                            np.array(order, dtype=np.intp))


def cost_matrix(network, t, demand):
    """Shortest-path cost matrix over the OD grid of ``demand``.

    Returns ``(T, trees)``: ``T`` has shape ``demand.shape`` with ``inf`` on
    unreachable pairs and outside the pair set; ``trees`` holds one tree per
    origin, in origin order.
    """
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise ValueError("link costs must be finite and non-negative")
    trees = [sssp(network, t, int(o)) for o in demand.origins]
    T = np.vstack([tree.dist[demand.destinations] for tree in trees])
    T[~demand.pairs] = np.inf
    return T, trees


def aon_assign(network, trees, d, destinations) -> np.ndarray:
    """Load each ``d[a, b]`` entirely onto the tree path origin ``a`` -> ``b``.

    ``d`` is indexed like the OD grid (origin tree order x ``destinations``).
    Loads are accumulated from the leaves toward the root of each tree, so no
    path is ever enumerated.
    """
    d = np.asarray(d, dtype=float)
    flows = np.zeros(network.link_count)
    tail = network.tail
    for a, tree in enumerate(trees):
        row = d[a]
        if not row.any():
            continue
        load = np.zeros(network.node_count)
        np.add.at(load, destinations, row)
        bad = (load > 0) & ~np.isfinite(tree.dist)
        if bad.any():
            raise ValueError(
                f"positive demand from node {tree.origin + 1} to unreachable node(s) "
                f"{(np.flatnonzero(bad) + 1).tolist()}")
        load[tree.origin] = 0.0
        pred = tree.pred
        for v in tree.order[::-1].tolist():
            lv = load[v]
            if lv and v != tree.origin:
                e = pred[v]
                flows[e] += lv
                load[tail[e]] += lv
    return flows
