"""Named, independent random streams derived from one master seed.

Each consumer (graph sampling, per-agent rewards, burn-in arm choice,
synthetic instance) gets its own stream, so switching one feature on or off
never shifts the draws seen by another.
"""

from __future__ import annotations

import numpy as np

_STREAM_IDS = {
    "instance": 0,
    "graph": 1,
    "burn_in": 2,
    "rewards": 3,
}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Return the generator for stream ``name`` (optionally sub-indexed, e.g. by agent)."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    try:
        sid = _STREAM_IDS[name]
    except KeyError:
        raise ValueError(f"unknown stream {name!r}") from None
    return np.random.default_rng(np.random.SeedSequence([int(seed), sid, *map(int, extra)]))
