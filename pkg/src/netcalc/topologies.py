#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Generators for the cyclic benchmark topologies: unidirectional and
bidirectional rings, the three-ring composition and the small fixed
fixtures used throughout the tests.

All generators follow the uniform experiment parameters (burst 1 kb, rate
1 kb/s, latency 10 ms) and scale every service rate like ``1/U`` so that
``U`` is the utilization of the busiest server.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .curves import RateLatency, TokenBucket
from .errors import ValidationError
from .network import Flow, Network

DEFAULT_BURST = 1.0
DEFAULT_RATE = 1.0
DEFAULT_LATENCY = 0.01


def _uniform_network(
    num_servers: int,
    paths: Sequence[Tuple[int, ...]],
    utilization: float,
    burst: float,
    rate: float,
    latency: float,
    rate_overrides: Optional[dict] = None,
) -> Network:
    if not (0 < utilization <= 1):
        raise ValidationError("utilization must be in (0, 1]")
    crossing = [0] * num_servers
    for path in paths:
        for j in path:
            crossing[j] += 1
    servers = []
    for j in range(num_servers):
        base = rate * max(crossing[j], 1)
        if rate_overrides and j in rate_overrides:
            base = rate_overrides[j]
        servers.append(RateLatency(base / utilization, latency))
    flows = tuple(Flow(TokenBucket(burst, rate), path) for path in paths)
    return Network(tuple(servers), flows)


def _loop(start: int, length: int, cycle: Sequence[int]) -> Tuple[int, ...]:
    pos = cycle.index(start)
    return tuple(cycle[(pos + k) % len(cycle)] for k in range(length))


def uni_ring(
    n: int,
    utilization: float,
    heterogeneous: bool = False,
    burst: float = DEFAULT_BURST,
    rate: float = DEFAULT_RATE,
    latency: float = DEFAULT_LATENCY,
) -> Network:
    """
    Unidirectional ring of ``n`` servers, crossed by ``n`` full-loop flows
    (flow ``i`` starts at server ``i``).  Every server carries all ``n``
    flows, so its service rate is ``n * rate / U``.

    With ``heterogeneous`` the two highest-index servers keep that rate
    while all others get twice as much (half the utilization).

    >>> net = uni_ring(10, 0.5)
    >>> net.servers[0].rate
    20.0
    """
    if n < 2:
        raise ValidationError("a ring needs at least two servers")
    cycle = list(range(n))
    paths = [_loop(i, n, cycle) for i in range(n)]
    overrides = None
    if heterogeneous:
        overrides = {j: 2 * n * rate for j in range(n - 2)}
    return _uniform_network(n, paths, utilization, burst, rate, latency, overrides)


def bi_ring(
    n: int,
    utilization: float,
    burst: float = DEFAULT_BURST,
    rate: float = DEFAULT_RATE,
    latency: float = DEFAULT_LATENCY,
) -> Network:
    """
    Bidirectional ring of ``n`` servers crossed by ``2n`` flows of length
    ``n``: the ``n`` clockwise full loops plus the ``n`` counter-clockwise
    ones.

    >>> [f.path for f in bi_ring(3, 0.5).flows[3:]]
    [(2, 1, 0), (1, 0, 2), (2, 0, 1)]
    """
    if n < 2:
        raise ValidationError("a ring needs at least two servers")
    forward = list(range(n))
    backward = list(reversed(range(n)))
    paths = [_loop(i, n, forward) for i in range(n)]
    paths.append(tuple(backward))
    for i in range(1, n):
        paths.append(_loop(i, n, backward))
    return _uniform_network(n, paths, utilization, burst, rate, latency)


def three_ring(
    utilization: float,
    ring_size: int = 10,
    short_len: int = 5,
    burst: float = DEFAULT_BURST,
    rate: float = DEFAULT_RATE,
    latency: float = DEFAULT_LATENCY,
) -> Network:
    """
    Three unidirectional rings of ``ring_size`` servers, pairwise sharing
    one border server (``3 * ring_size - 3`` servers in total).  The first
    two rings carry one full-loop flow per server; the third carries one
    flow of length ``short_len`` per server.

    Layout: ring 0 is ``0 .. s-1``; ring 1 shares server ``s-1`` and adds
    ``s .. 2s-2``; ring 2 shares servers ``2s-2`` and ``0`` and adds
    ``2s-1 .. 3s-4``.
    """
    s = ring_size
    if s < 3:
        raise ValidationError("ring_size must be at least 3")
    if not (1 <= short_len <= s):
        raise ValidationError("short_len must be in [1, ring_size]")
    ring0 = list(range(0, s))
    ring1 = [s - 1] + list(range(s, 2 * s - 1))
    ring2 = [2 * s - 2] + list(range(2 * s - 1, 3 * s - 3)) + [0]
    paths: List[Tuple[int, ...]] = []
    for cycle, length in ((ring0, s), (ring1, s), (ring2, short_len)):
        for start in cycle:
            paths.append(_loop(start, length, cycle))
    return _uniform_network(3 * s - 3, paths, utilization, burst, rate, latency)


def toy(
    utilization: float = 0.5,
    f4_path: Tuple[int, ...] = (1, 2, 3),
    burst: float = DEFAULT_BURST,
    rate: float = DEFAULT_RATE,
    latency: float = DEFAULT_LATENCY,
) -> Network:
    """
    The four-server cyclic fixture: flows (2,3,1), (3,1,2), (1,0,2) and a
    configurable fourth flow, default (1,2,3).
    """
    paths = [(2, 3, 1), (3, 1, 2), (1, 0, 2), tuple(f4_path)]
    return _uniform_network(4, paths, utilization, burst, rate, latency)


def two_server_sink_tree(
    burst: float = 1.0,
    rate: float = 1.0,
    service_rate: float = 2.0,
    latency: float = 1.0,
) -> Network:
    """
    The two-server sink tree: one flow through both servers and one
    entering at the second, which serves at twice the rate of the first.
    """
    servers = (RateLatency(service_rate, latency), RateLatency(2 * service_rate, latency))
    flows = (
        Flow(TokenBucket(burst, rate), (0, 1)),
        Flow(TokenBucket(burst, rate), (1,)),
    )
    return Network(servers, flows)


GENERATORS = {
    "uni_ring": uni_ring,
    "bi_ring": bi_ring,
    "three_ring": three_ring,
    "toy": toy,
    "two_server_sink_tree": two_server_sink_tree,
}
