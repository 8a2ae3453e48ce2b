# The coupled problem on a tiny network, checked against a direct solve.
#
# Three zones, six links, four OD pairs.  The dual method works on link
# times only; the brute-force oracle enumerates every path and hands the
# whole primal problem to a conic solver.

import numpy as np

from twostage import fixtures, solve_two_stage
from twostage.cli import ORACLE_GAMMA, oracle_config
from twostage.solver import brute_force_oracle

net, demand = fixtures.triangle()
result = solve_two_stage(net, demand, oracle_config(demand.total))
d_bf, f_bf = brute_force_oracle(net, demand, ORACLE_GAMMA)

print("status:", result.status, "after", result.iterations, "steps")
print("link times:", np.round(result.times, 4))
print("link flows (dual) :", np.round(result.flows, 3))
print("link flows (brute):", np.round(f_bf, 3))
print("trips (dual):")
print(np.round(result.demand_vehicles, 3))
print("trips (brute):")
print(np.round(d_bf, 3))
print("largest difference / total demand:",
      max(np.abs(result.flows - f_bf).max(), np.abs(result.demand_vehicles - d_bf).max())
      / demand.total)
