"""Deterministic derivation of independent random streams from integer keys."""

import numpy as np


def derive_seed(*keys):
    """64-bit seed derived from a tuple of non-negative integer keys."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(*keys):
    """Independent generator for the given key path."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
