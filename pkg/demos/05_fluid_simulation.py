#!/usr/bin/env python3
"""
Fluid simulation against the analytical bounds.

Random admissible scenarios always stay below the computed worst case (up
to one grid step of slack), and the reconstructed extremal scenario --
consecutive minimal-service windows with end-of-window flushes -- reaches
it.  Every produced trajectory passes the arrival-curve and
strict-service admissibility checkers.
"""

from netcalc import (
    check_arrival_curves,
    check_strict_service,
    discretization_slack,
    random_scenario,
    simulate_fluid,
    tree_backlog,
    worst_case_scenario,
)
from netcalc.topologies import two_server_sink_tree

net = two_server_sink_tree()
interest = [0]
bound = tree_backlog(net, interest).value.value
print("analytical worst-case backlog:", bound)

dt = 1e-3
slack = discretization_slack(net, dt)
print("grid step %g s -> comparison slack %g kb" % (dt, slack))

print("\nrandom admissible scenarios (seeded):")
for seed in range(5):
    traj = simulate_fluid(net, random_scenario(net, horizon=8.0, seed=seed), dt=dt)
    observed = traj.max_backlog(1, interest)
    print(
        "  seed %d: observed %.4f  <= bound %s  admissible=%s"
        % (
            seed,
            observed,
            observed <= bound + slack,
            check_arrival_curves(traj) and check_strict_service(traj),
        )
    )

print("\nextremal scenario:")
scenario = worst_case_scenario(net, interest)
for j, spec in enumerate(scenario.servers):
    print("  server %d backlogged window: [%.4f, %.4f]" % (j + 1, *spec.window))
traj = simulate_fluid(net, scenario, dt=dt)
observed = traj.max_backlog(1, interest)
print("  observed %.4f vs bound %.4f (gap %.4f, slack %.4f)"
      % (observed, bound, abs(observed - bound), slack))
