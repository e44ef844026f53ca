"""
Training pipeline.

- normalizer: feature/target statistics fitted on the pre-training train split
- windows: lazily materialised DELAY / MCT windows with baseline histories
- trainer: pre-training and fine-tuning loops
- evaluate: EvalReport and the shared scoring path
"""

from ..core.tasks import EvalTask, Task
from .evaluate import EvalReport, evaluate, evaluate_baselines, evaluate_predictor
from .model_io import TrainedModel, load_model, save_model
from .normalizer import Normalizer, fit_normalizer
from .trainer import FinetuneMode, TrainConfig, TrainResult, finetune, pretrain
from .windows import WindowBatch, WindowSet, audit_leakage, make_windows

__all__ = [
    "EvalReport",
    "EvalTask",
    "FinetuneMode",
    "Normalizer",
    "Task",
    "TrainConfig",
    "TrainResult",
    "TrainedModel",
    "WindowBatch",
    "WindowSet",
    "audit_leakage",
    "evaluate",
    "evaluate_baselines",
    "evaluate_predictor",
    "finetune",
    "fit_normalizer",
    "load_model",
    "make_windows",
    "pretrain",
    "save_model",
]
