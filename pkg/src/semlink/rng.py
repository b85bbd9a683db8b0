"""Deterministic random substreams.

Every Monte Carlo consumer asks for a generator keyed by ``(seed, *path)``
(for example ``(seed, user, replication)``).  Streams come from the Philox
counter-based bit generator, so a stream's draws depend only on its key and
never on how many other streams were created or in which order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "DEFAULT_SEED"]

DEFAULT_SEED = 20240601


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the task identified by ``path``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
