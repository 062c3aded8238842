"""Named, order-independent random substreams.

All randomness in the package flows from a single integer seed through
``SeedSequence`` spawn keys, so parallel or reordered execution cannot change
results: the stream for a given (seed, path) pair is fixed.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the substream addressed by ``path`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return np.random.default_rng(ss)


def child_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed (for components that take a plain integer seed)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(x) for x in path))
    return int(ss.generate_state(1, np.uint64)[0])
