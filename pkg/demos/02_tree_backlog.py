#!/usr/bin/env python3
"""
Tight worst-case backlog and delay in a tree.

The two-server sink tree: a flow of interest crosses a slow server then a
fast one, joined there by cross traffic.  The coefficient algorithm gives
the exact worst case as a linear form in the bursts and latencies, and the
brute-force case enumeration confirms it from first principles.
"""

from netcalc import (
    bruteforce_backlog,
    compute_xi,
    tree_backlog,
    tree_delay,
    tree_output_curve,
)
from netcalc.topologies import two_server_sink_tree

b, r, R, T = 1.0, 1.0, 2.0, 1.0
net = two_server_sink_tree(burst=b, rate=r, service_rate=R, latency=T)

table = compute_xi(net, interest=[0])
print("xi[second server -> itself]:", table.xi[(1, 1)], "= r/(2R-r) =", r / (2 * R - r))
print("xi[first server -> sink]:   ", table.xi[(0, 1)], "= r/R      =", r / R)

result = tree_backlog(net, interest=[0])
print("\nworst-case backlog of the through flow at the sink:", result.value)
print("  burst weights (phi):  ", result.burst_coefficients)
print("  latency weights (rho):", result.latency_coefficients)

print("independent case enumeration gives:", bruteforce_backlog(net, [0]))

delay = tree_delay(net, 0)
closed_form = 2 * T + b / R + (b + r * T) / (2 * R - r)
print("\nend-to-end delay:", float(delay), "  closed form:", closed_form)
print("(the classical sink-tree formula gives the looser", 2 * T + (2 * b + r * T) / R, ")")

print("\ndeparture envelope at the sink:", tree_output_curve(net, [0]))
