"""
Base predictor interface.

A predictor maps a batch of windows to raw-scale predictions: delay in
seconds for DELAY windows, ln(MCT seconds) for MCT windows.
"""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Any, Dict, Optional

import numpy as np

if TYPE_CHECKING:
    from ..training.windows import WindowBatch


class Predictor(ABC):
    """Abstract base class for everything that produces a results-table row."""

    def __init__(self, config: Optional[Dict[str, Any]] = None) -> None:
        self.config: Dict[str, Any] = dict(config or {})

    @abstractmethod
    def predict(self, batch: "WindowBatch") -> np.ndarray:
        """
        Predict the target of every window in `batch`.

        Returns:
            [B] float64 array on the raw target scale.
        """

    @abstractmethod
    def get_name(self) -> str:
        """Label used in reports."""

    @property
    def is_learned(self) -> bool:
        """Whether predictions come from trained parameters."""
        return False


class BaselinePredictor(Predictor):
    """Naive predictor reported next to every trained row; needs no parameters."""
