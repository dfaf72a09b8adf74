#!/usr/bin/env python3
"""
Single-server bounds from curve parameters.

A flow constrained by a token bucket (burst b, rate r) crossing a server
with a rate-latency guarantee (rate R, latency T) has closed-form
worst-case backlog and busy-period bounds; groups of flows sharing the
server get a residual-rate bound.
"""

from netcalc import (
    RateLatency,
    TokenBucket,
    backlog_bound,
    busy_period_bound,
    classify_server,
    group_backlog_bound,
    output_curve,
)

alpha = TokenBucket(burst=1.0, rate=1.0)        # 1 kb burst, 1 kb/s
beta = RateLatency(rate=2.0, latency=0.01)      # 2 kb/s after 10 ms

print("server class:       ", classify_server(alpha, beta).value)
print("max backlog:        ", backlog_bound(alpha, beta), "kb")
print("max busy period:    ", busy_period_bound(alpha, beta), "s")

# the departures of a flow with bounded backlog are again token-bucket
departures = output_curve(backlog_bound(alpha, beta), alpha.rate)
print("departure envelope: ", departures)

# two flows sharing a server: the bound for one of them counts the other
# at the residual rate
cross = TokenBucket(burst=2.0, rate=0.5)
shared = RateLatency(rate=3.0, latency=0.01)
print("group backlog:      ", group_backlog_bound([alpha], [cross], shared), "kb")

# no strict rate margin, no finite bound
hot = TokenBucket(burst=1.0, rate=3.0)
print("overloaded server:  ", backlog_bound(hot, beta))
