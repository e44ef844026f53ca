"""Naive predictors: last observed value and an EWMA over the history."""

from enum import Enum
from typing import Sequence

import numpy as np

EWMA_ALPHA = 0.01


class BaselineKind(Enum):
    LAST_OBSERVED = "LAST_OBSERVED"
    EWMA = "EWMA"


def ewma(history: Sequence[float], alpha: float = EWMA_ALPHA) -> float:
    """s <- alpha*x + (1-alpha)*s over the history in order, s starting at the first value."""
    s = float(history[0])
    for x in history[1:]:
        s = alpha * float(x) + (1.0 - alpha) * s
    return s


def baseline_predict(kind: BaselineKind, history: Sequence[float], alpha: float = EWMA_ALPHA) -> float:
    """
    Raises:
        ValueError: empty history.
    """
    if len(history) == 0:
        raise ValueError("baseline needs a non-empty history")
    if kind is BaselineKind.LAST_OBSERVED:
        return float(history[-1])
    return ewma(history, alpha)


def ewma_rows(histories: np.ndarray, alpha: float = EWMA_ALPHA) -> np.ndarray:
    """EWMA of every row of a [N x T] array; same arithmetic as `ewma` per row."""
    histories = np.asarray(histories, dtype=np.float64)
    s = histories[:, 0].copy()
    for t in range(1, histories.shape[1]):
        s = alpha * histories[:, t] + (1.0 - alpha) * s
    return s
