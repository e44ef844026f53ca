"""Trained NTT wrapped as a predictor."""

import logging

import numpy as np

from ..core.errors import UsageError
from ..core.tasks import Task
from ..model.network import forward_delay, forward_mct, log_size_feature
from .base import Predictor

logger = logging.getLogger(__name__)


class NTTPredictor(Predictor):
    """
    Config keys:
        params: NTTParams of the trained model (required)
        normalizer: Normalizer the model was trained with (required)
        label: report label (default "NTT")
    """

    def __init__(self, config=None) -> None:
        super().__init__(config)
        missing = [k for k in ("params", "normalizer") if self.config.get(k) is None]
        if missing:
            raise UsageError(f"NTT predictor needs {missing}")
        self.params = self.config["params"]
        self.normalizer = self.config["normalizer"]

    @property
    def is_learned(self) -> bool:
        return True

    def predict(self, batch) -> np.ndarray:
        # batch.features are already masked
        if batch.task is Task.DELAY:
            z = forward_delay(batch.features, self.params).numpy()
            return self.normalizer.denormalize_delay(z)
        size_z = log_size_feature(batch.message_size, self.normalizer.log_size_scale)
        z = forward_mct(batch.features, size_z, self.params).numpy()
        return self.normalizer.denormalize_log_mct(z)

    def get_name(self) -> str:
        return str(self.config.get("label", "NTT"))
