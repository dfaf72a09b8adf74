#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
JSON network files and CSV emission.

A network file is a JSON document

.. code-block:: json

    {"servers": [{"rate": 10.0, "latency": 0.01}],
     "flows": [{"path": [1], "burst": 1.0, "rate": 1.0}]}

with 1-indexed server ids in the paths (the library API is 0-indexed).
Round-trips are lossless.
"""

from __future__ import annotations

import json
from typing import IO, Optional, Sequence, Union

from .curves import RateLatency, TokenBucket
from .errors import ValidationError
from .network import Flow, Network


def network_to_dict(net: Network) -> dict:
    """JSON-ready dictionary with 1-indexed paths."""
    return {
        "servers": [
            {"rate": s.rate, "latency": s.latency} for s in net.servers
        ],
        "flows": [
            {
                "path": [j + 1 for j in f.path],
                "burst": f.arrival.burst,
                "rate": f.arrival.rate,
            }
            for f in net.flows
        ],
    }


def network_from_dict(doc: dict) -> Network:
    """Parse and validate the JSON document shape."""
    if not isinstance(doc, dict):
        raise ValidationError("network file must hold a JSON object")
    try:
        servers = tuple(
            RateLatency(float(s["rate"]), float(s["latency"]))
            for s in doc["servers"]
        )
        flows = tuple(
            Flow(
                TokenBucket(float(f["burst"]), float(f["rate"])),
                tuple(int(j) - 1 for j in f["path"]),
            )
            for f in doc["flows"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("malformed network file: %s" % exc) from exc
    return Network(servers, flows)


def save_network(net: Network, target: Union[str, IO[str]]) -> None:
    """Write ``net`` as a JSON network file (path or open stream)."""
    doc = network_to_dict(net)
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as stream:
            json.dump(doc, stream, indent=2)
            stream.write("\n")
    else:
        json.dump(doc, target, indent=2)
        target.write("\n")


def load_network(source: Union[str, IO[str]]) -> Network:
    """Read a JSON network file (path or open stream)."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as stream:
            doc = json.load(stream)
    else:
        doc = json.load(source)
    return network_from_dict(doc)


def format_value(value: Optional[float]) -> str:
    """CSV cell: 9 significant digits, dot decimal, ``inf`` for unbounded."""
    if value is None or value != value or value == float("inf"):
        return "inf"
    return "%.9g" % value


def write_sweep_csv(
    stream: IO[str],
    columns: Sequence[str],
    rows: Sequence[Sequence[Optional[float]]],
) -> None:
    """Emit the sweep table: a header line then one row per utilization."""
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(format_value(v) for v in row) + "\n")
