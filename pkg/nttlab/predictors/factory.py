"""
Predictor factory.

Registry of predictor classes by name; the evaluation path creates every
model and baseline row through it.
"""

import logging
from typing import Any, Dict, List, Optional, Type

from .base import BaselinePredictor, Predictor

logger = logging.getLogger(__name__)


class PredictorFactory:
    """Registry pattern for predictor classes."""

    _predictors: Dict[str, Type[Predictor]] = {}

    @classmethod
    def register(cls, name: str, predictor_class: Type[Predictor]) -> None:
        cls._predictors[name] = predictor_class
        logger.debug(f"Registered predictor: {name}")

    @classmethod
    def create(cls, name: str, config: Optional[Dict[str, Any]] = None) -> Predictor:
        """
        Instantiate a registered predictor.

        Raises:
            ValueError: If the predictor name is unknown
        """
        if name not in cls._predictors:
            available = list(cls._predictors.keys())
            raise ValueError(f"Unknown predictor: '{name}'. Available: {available}")
        return cls._predictors[name](config or {})

    @classmethod
    def list_predictors(cls) -> List[str]:
        return list(cls._predictors.keys())

    @classmethod
    def baseline_names(cls) -> List[str]:
        """Names of the registered BaselinePredictor subclasses, in registration order."""
        return [
            name
            for name, predictor_class in cls._predictors.items()
            if issubclass(predictor_class, BaselinePredictor)
        ]

    @classmethod
    def is_registered(cls, name: str) -> bool:
        return name in cls._predictors

    @classmethod
    def unregister(cls, name: str) -> bool:
        """Unregister a predictor (mainly for testing)."""
        if name in cls._predictors:
            del cls._predictors[name]
            return True
        return False


def _auto_register_predictors():
    from .baseline_predictor import EwmaPredictor, LastObservedPredictor, OraclePredictor
    from .ntt_predictor import NTTPredictor

    PredictorFactory.register("NTT", NTTPredictor)
    PredictorFactory.register("LAST_OBSERVED", LastObservedPredictor)
    PredictorFactory.register("EWMA", EwmaPredictor)
    PredictorFactory.register("ORACLE", OraclePredictor)


# Auto-register on import
_auto_register_predictors()
