"""
Predictors scored by the evaluation path.

Every row of a results table comes from a Predictor: the trained NTT, the
naive baselines (last observed, EWMA) or the oracle used in tests. They are
created by name through PredictorFactory.
"""

from .base import BaselinePredictor, Predictor
from .baseline_predictor import EwmaPredictor, LastObservedPredictor, OraclePredictor
from .factory import PredictorFactory
from .ntt_predictor import NTTPredictor

__all__ = [
    "BaselinePredictor",
    "EwmaPredictor",
    "LastObservedPredictor",
    "NTTPredictor",
    "OraclePredictor",
    "Predictor",
    "PredictorFactory",
]
