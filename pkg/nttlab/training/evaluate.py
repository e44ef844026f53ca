"""
Test-set scoring.

Every row (model or baseline) goes through `evaluate_predictor`, so all of
them see the same windows, the same masked features and the same histories.
DELAY is scored in raw seconds^2; MCT in squared natural-log seconds.
"""

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from ..core.errors import EmptyDatasetError, ShapeError
from ..core.tasks import EvalTask, Task
from ..model.params import NTTParams
from ..model.variants import VariantKind
from ..predictors.base import Predictor
from ..predictors.factory import PredictorFactory
from ..utils.config import validate_document
from ..utils.integrity import canonical_json
from .normalizer import Normalizer
from .windows import WindowSet

logger = logging.getLogger(__name__)

EVAL_BATCH_SIZE = 256


@dataclass
class EvalReport:
    task: EvalTask
    mse: float
    n_examples: int
    model: str
    dataset: str
    log_base: str = "e"
    seed: Optional[int] = None
    config_hash: Optional[str] = None

    def __post_init__(self):
        if not self.mse >= 0:
            raise ValueError(f"mse must be >= 0, got {self.mse}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task.value,
            "mse": self.mse,
            "n_examples": self.n_examples,
            "model": self.model,
            "dataset": self.dataset,
            "log_base": self.log_base,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        validate_document(data, "eval_report")
        return cls(
            task=EvalTask(data["task"]),
            mse=float(data["mse"]),
            n_examples=int(data["n_examples"]),
            model=data["model"],
            dataset=data["dataset"],
            log_base=data.get("log_base", "e"),
            seed=data.get("seed"),
            config_hash=data.get("config_hash"),
        )

    def to_json_line(self) -> str:
        doc = self.to_dict()
        validate_document(doc, "eval_report")
        return canonical_json(doc)


def read_reports(text: str) -> List[EvalReport]:
    """Parse EvalReport JSON lines (blank lines ignored)."""
    return [EvalReport.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def squared_errors(predictor: Predictor, windows: WindowSet, batch_size: int = EVAL_BATCH_SIZE) -> np.ndarray:
    """Per-window squared error on the raw scale, in window order."""
    chunks = []
    for batch in windows.batches(batch_size):
        pred = np.asarray(predictor.predict(batch), dtype=np.float64)
        if pred.shape != batch.targets.shape:
            raise ShapeError(
                f"{predictor.get_name()} returned shape {pred.shape} for {len(batch)} windows"
            )
        chunks.append((pred - batch.targets) ** 2)
    return np.concatenate(chunks)


def evaluate_predictor(
    predictor: Predictor,
    windows: WindowSet,
    dataset: str = "",
    seed: Optional[int] = None,
    config_hash: Optional[str] = None,
    batch_size: int = EVAL_BATCH_SIZE,
) -> EvalReport:
    """Test MSE of `predictor` over every window.

    Raises:
        EmptyDatasetError: no windows.
    """
    if len(windows) == 0:
        raise EmptyDatasetError(f"no {windows.task.value} test windows to evaluate on")
    errors = squared_errors(predictor, windows, batch_size)
    report = EvalReport(
        task=EvalTask.for_task(windows.task),
        mse=float(errors.mean()),
        n_examples=int(errors.shape[0]),
        model=predictor.get_name(),
        dataset=dataset or windows.label,
        seed=seed,
        config_hash=config_hash,
    )
    logger.info(
        f"{report.model} on {report.dataset or 'test'} [{report.task.value}]: "
        f"mse {report.mse:.6g} over {report.n_examples} windows"
    )
    return report


def evaluate(
    params: NTTParams,
    variant: VariantKind,
    windows: WindowSet,
    task: Task,
    normalizer: Optional[Normalizer] = None,
    **kwargs,
) -> EvalReport:
    """Score a trained model; predictions are denormalised before scoring.

    Raises:
        ValueError: windows belong to another task.
        EmptyDatasetError: no windows.
    """
    if windows.task is not task:
        raise ValueError(f"evaluating {task.value} on {windows.task.value} windows")
    predictor = PredictorFactory.create(
        "NTT",
        {"params": params, "normalizer": normalizer or windows.normalizer, "label": variant.value},
    )
    return evaluate_predictor(predictor, windows, **kwargs)


def evaluate_baselines(windows: WindowSet, **kwargs) -> List[EvalReport]:
    """One report per registered naive baseline, on the same windows."""
    return [
        evaluate_predictor(PredictorFactory.create(name), windows, **kwargs)
        for name in PredictorFactory.baseline_names()
    ]
