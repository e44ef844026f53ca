"""
Message workload: heavy-tailed message sizes and packetisation.

The default size distribution is a log-normal (median 4 kB, sigma 2) truncated
to [100 B, 2 MB], sampled by inverse CDF so every draw consumes exactly one
uniform from the generator.
"""

import math
from typing import List

import numpy as np
from scipy.special import ndtr, ndtri

from .specs import SizeDistribution, SizeKind


def _truncation_bounds(dist: SizeDistribution) -> tuple:
    lo = ndtr((math.log(dist.min_size) - dist.mu) / dist.sigma)
    hi = ndtr((math.log(dist.max_size) - dist.mu) / dist.sigma)
    return float(lo), float(hi)


def analytic_mean(dist: SizeDistribution) -> float:
    """Closed-form mean (bytes) of the configured distribution."""
    if dist.kind is SizeKind.POINT:
        return float(dist.value)
    lo, hi = _truncation_bounds(dist)
    s2 = dist.sigma * dist.sigma
    shifted = ndtr((math.log(dist.max_size) - dist.mu - s2) / dist.sigma) - ndtr(
        (math.log(dist.min_size) - dist.mu - s2) / dist.sigma
    )
    return math.exp(dist.mu + s2 / 2.0) * float(shifted) / (hi - lo)


def sample_message_sizes(dist: SizeDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw `n` integer message sizes in [min_size, max_size]."""
    if dist.kind is SizeKind.POINT:
        return np.full(n, dist.value, dtype=np.int64)
    lo, hi = _truncation_bounds(dist)
    u = lo + (hi - lo) * rng.random(n)
    x = np.exp(dist.mu + dist.sigma * ndtri(u))
    return np.clip(np.rint(x), dist.min_size, dist.max_size).astype(np.int64)


def sample_message_size(dist: SizeDistribution, rng: np.random.Generator) -> int:
    """Draw one message size (bytes); advances `rng` by one uniform."""
    if dist.kind is SizeKind.POINT:
        return int(dist.value)
    return int(sample_message_sizes(dist, rng, 1)[0])


def packetize(message_size: int, mss: int) -> List[int]:
    """Split a message into MSS-sized packets; the last one carries the remainder."""
    full, rest = divmod(message_size, mss)
    sizes = [mss] * full
    if rest:
        sizes.append(rest)
    return sizes


def message_rate(per_sender_rate: float, dist: SizeDistribution) -> float:
    """Poisson message arrival rate (1/s) that offers `per_sender_rate` bits/s."""
    return per_sender_rate / (8.0 * analytic_mean(dist))
