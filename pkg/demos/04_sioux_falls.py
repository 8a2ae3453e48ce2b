# Sioux Falls: convergence of the duality gap.
#
# Runs 2000 steps from free-flow times and fits the decay rate of the gap
# on a log-log scale.  Pass an output directory to also write the tables.

import sys
import time

import numpy as np

from twostage import (
    SolverConfig,
    marginals,
    read_net,
    read_trips,
    sioux_falls_paths,
    solve_two_stage,
)
from twostage.tntp_io import write_tables

net_path, trips_path = sioux_falls_paths()
net = read_net(net_path)
demand = marginals(read_trips(trips_path, zone_count=net.zone_count))
print(f"{net.node_count} nodes, {net.link_count} links, {demand.pair_count} OD pairs, "
      f"{demand.total:.0f} trips")


start = time.perf_counter()
result = solve_two_stage(net, demand, SolverConfig(max_iter=2000, stop_on_gap=False))
print(f"{result.iterations} steps in {time.perf_counter() - start:.0f} s, "
      f"gamma={result.config.gamma:.3f}, eps={result.config.eps:.3g}")

k, gap = result.history.gaps()
for step in (10, 50, 100, 500, 1000, 2000):
    print(f"  k={step:5d}  gap={gap[k == step][0]:.4g}")
keep = k >= 50
slope = np.polyfit(np.log(k[keep]), np.log(gap[keep]), 1)[0]
print(f"gap ~ k^{slope:.2f}")

if len(sys.argv) > 1:
    paths = write_tables(result, net, demand, sys.argv[1])
    print("tables:", ", ".join(str(p) for p in paths.values()))
