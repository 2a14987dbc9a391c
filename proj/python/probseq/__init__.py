"""Probabilistic fair event sequencing.

Events are ``(client, local_ts_ns, seq)`` tuples. Correction samples are a
list indexed by client id. Configs are dicts (or JSON text) with the same keys
as the CLI config file.
"""

import json as _json

from . import _probseq
from ._probseq import (
    ConfigError,
    DifferenceTable,
    ProtocolError,
    TickOverflow,
    baseline_order,
    drift_bound,
    error_bound,
    offset_bound,
    order_events,
    pairwise_probability,
    precompute_diffs,
    ras,
    rank_stats,
)

__version__ = "0.1.0"


def _text(config):
    if config is None:
        return "{}"
    return config if isinstance(config, str) else _json.dumps(config)


def normalize_config(config=None):
    """Validated config with defaults filled in, as a dict."""
    return _json.loads(_probseq.normalize_config(_text(config)))


def run_scenario(config=None):
    return _probseq.run_scenario(_text(config))


def run_hedging(config=None):
    """``config`` is the full config; hedging settings live under "hedging"."""
    return _probseq.run_hedging(_text(config))


__all__ = [
    "ConfigError",
    "DifferenceTable",
    "ProtocolError",
    "TickOverflow",
    "baseline_order",
    "drift_bound",
    "error_bound",
    "normalize_config",
    "offset_bound",
    "order_events",
    "pairwise_probability",
    "precompute_diffs",
    "ras",
    "rank_stats",
    "run_hedging",
    "run_scenario",
]
