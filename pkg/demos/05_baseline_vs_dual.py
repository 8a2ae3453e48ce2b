# Why not just alternate?
#
# The obvious scheme distributes trips on current costs, assigns them to an
# equilibrium, and repeats.  On Sioux Falls the trip matrix starts to
# oscillate instead of settling; the dual method reaches its target gap.

from twostage import (
    SolverConfig,
    baseline_alternation,
    marginals,
    read_net,
    read_trips,
    sioux_falls_paths,
    solve_two_stage,
)

net_path, trips_path = sioux_falls_paths()
net = read_net(net_path)
demand = marginals(read_trips(trips_path, zone_count=net.zone_count))

base = baseline_alternation(net, demand, SolverConfig(mode="baseline"))
print("alternation:", base.status, "after", base.iterations, "passes")
for p, (dd, df) in enumerate(zip(base.info["d_changes"], base.info["f_changes"]), 1):
    print(f"  pass {p:2d}  trip change {dd:.4f}  flow change {df:.4f}")

dual = solve_two_stage(net, demand)
print(f"dual method: {dual.status} after {dual.iterations} steps, "
      f"gap {dual.gap:.3g} (target {dual.config.eps:.3g})")
