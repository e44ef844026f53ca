"""
Named random substreams.

All randomness flows from one integer seed. A stage asks for its own
generator by name (and optional integer keys such as a run index), so stages
stay reproducible independently of each other.
"""

import hashlib
from typing import Tuple

import numpy as np

# Stream names used across the package.
SIMULATE = "simulate"
INIT = "init"
SHUFFLE = "shuffle"
SPLIT = "split"
GRADCHECK = "gradcheck"


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")


def substream_seed(seed: int, name: str, *keys: int) -> Tuple[int, ...]:
    """Entropy tuple for SeedSequence: (seed, hash(name), *keys)."""
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and substream keys must be non-negative")
    return (int(seed), _name_key(name), *(int(k) for k in keys))


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """A PCG64 generator for the named substream of `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(substream_seed(seed, name, *keys))))
