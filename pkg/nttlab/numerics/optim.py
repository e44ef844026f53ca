"""Adam optimizer with bias correction."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from ..core.errors import GraphStateError
from .tensor import Parameter

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.step < 0:
            raise ValueError("step must be >= 0")


def adam_step(params: Iterable[Parameter], state: AdamState) -> AdamState:
    """Apply one Adam update to every parameter in `params` (in the given order).

    Raises:
        GraphStateError: a parameter has no gradient (backward not run).
    """
    params = list(params)
    for p in params:
        if p.grad is None:
            raise GraphStateError(f"parameter {p.name} has no gradient; run backward first")

    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p in params:
        g = p.grad
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        elif m.shape != p.data.shape:
            raise GraphStateError(f"moment shape {m.shape} does not match {p.name} {p.data.shape}")
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        state.m[p.name] = m
        state.v[p.name] = v
        p.assign(p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
    return state
