"""Naive predictors that only look at the history carried by each window."""

import numpy as np

from ..model.baselines import EWMA_ALPHA, ewma, ewma_rows
from .base import BaselinePredictor, Predictor


class LastObservedPredictor(BaselinePredictor):
    """Predicts the most recent observed value."""

    def predict(self, batch) -> np.ndarray:
        if batch.history_matrix is not None:
            return batch.history_matrix[:, -1].copy()
        return np.array([h[-1] for h in batch.histories], dtype=np.float64)

    def get_name(self) -> str:
        return "LAST_OBSERVED"


class EwmaPredictor(BaselinePredictor):
    """EWMA over the history, oldest value first (config key `alpha`, default 0.01)."""

    @property
    def alpha(self) -> float:
        return float(self.config.get("alpha", EWMA_ALPHA))

    def predict(self, batch) -> np.ndarray:
        if batch.history_matrix is not None:
            return ewma_rows(batch.history_matrix, self.alpha)
        return np.array([ewma(h, self.alpha) for h in batch.histories], dtype=np.float64)

    def get_name(self) -> str:
        return "EWMA"


class OraclePredictor(Predictor):
    """Returns the true targets; scores exactly zero."""

    def predict(self, batch) -> np.ndarray:
        return np.asarray(batch.targets, dtype=np.float64).copy()

    def get_name(self) -> str:
        return "ORACLE"
