"""
Pre-training and fine-tuning loops.

Both loops share `_fit`: per epoch, a seeded permutation of the windows is
cut into batches; each batch is masked, run forward, scored with MSE on the
normalised target, back-propagated and followed by one Adam step over the
trainable parameters only.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from ..core.errors import ConfigError, NonFiniteError, TrainingDivergedError, UsageError
from ..core.tasks import Task
from ..model.config import NTTConfig
from ..model.network import forward_delay, forward_mct, log_size_feature
from ..model.params import NTTParams, attach_mct_head
from ..model.variants import VariantKind, build_variant
from ..numerics.ops import mse_loss
from ..numerics.optim import AdamState, adam_step
from ..numerics.tensor import Parameter, backward
from ..utils.fsio import atomic_write_text
from ..utils.seeding import SHUFFLE, substream
from .windows import WindowBatch, WindowSet

logger = logging.getLogger(__name__)


class FinetuneMode(Enum):
    DECODER_ONLY = "DECODER_ONLY"
    FULL = "FULL"


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 1
    window_stride: int = 16
    seed: int = 0
    finetune_mode: FinetuneMode = FinetuneMode.DECODER_ONLY

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.window_stride < 1:
            raise ConfigError(f"window_stride must be >= 1, got {self.window_stride}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    def to_dict(self):
        return {
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "window_stride": self.window_stride,
            "seed": self.seed,
            "finetune_mode": self.finetune_mode.value,
        }


@dataclass
class TrainResult:
    params: NTTParams
    loss_curve: List[float] = field(default_factory=list)  # mean train loss per epoch
    steps: int = 0

    def loss_csv(self) -> str:
        lines = ["epoch,loss"]
        lines += [f"{epoch},{loss!r}" for epoch, loss in enumerate(self.loss_curve, start=1)]
        return "\n".join(lines) + "\n"

    def write_loss_curve(self, path: str) -> int:
        return atomic_write_text(path, self.loss_csv())


def _batch_loss(params: NTTParams, batch: WindowBatch, log_size_scale):
    if batch.task is Task.DELAY:
        pred = forward_delay(batch.features, params)
    else:
        z = log_size_feature(batch.message_size, log_size_scale)
        pred = forward_mct(batch.features, z, params)
    return mse_loss(pred, batch.targets_normalized)


def _check_compatible(params: NTTParams, windows: WindowSet) -> None:
    config = params.config
    if windows.window_length != config.window_length:
        raise UsageError(
            f"windows of length {windows.window_length} do not fit a model expecting "
            f"{config.window_length} packets"
        )
    if windows.schema != config.schema:
        raise UsageError(f"window features {windows.schema} differ from the model's {config.schema}")


def _fit(
    params: NTTParams,
    trainable: List[Parameter],
    windows: WindowSet,
    cfg: TrainConfig,
    stage: str,
) -> TrainResult:
    result = TrainResult(params=params)
    if cfg.epochs == 0 or len(windows) == 0:
        if len(windows) == 0 and cfg.epochs > 0:
            logger.warning(f"{stage}: no training windows; parameters left at their initial values")
        return result

    state = AdamState(lr=cfg.lr)
    log_size_scale = windows.normalizer.log_size_scale
    for epoch in range(1, cfg.epochs + 1):
        order = substream(cfg.seed, SHUFFLE, epoch).permutation(len(windows))
        total, seen = 0.0, 0
        for batch_index, batch in enumerate(windows.batches(cfg.batch_size, order)):
            for p in trainable:
                p.zero_grad()
            try:
                loss = _batch_loss(params, batch, log_size_scale)
            except NonFiniteError as e:
                raise TrainingDivergedError(cfg.lr, batch_index, epoch) from e
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergedError(cfg.lr, batch_index, epoch)
            backward(loss)
            adam_step(trainable, state)
            result.steps += 1
            total += value * len(batch)
            seen += len(batch)
            logger.debug(f"{stage} epoch {epoch} batch {batch_index}: loss {value:.6f}")
        epoch_loss = total / seen
        result.loss_curve.append(epoch_loss)
        logger.info(f"{stage} epoch {epoch}/{cfg.epochs}: train loss {epoch_loss:.6f}")
    return result


def pretrain(
    variant: VariantKind,
    windows: WindowSet,
    cfg: TrainConfig,
    base: Optional[NTTConfig] = None,
    params: Optional[NTTParams] = None,
) -> TrainResult:
    """Masked-delay pre-training of a fresh (or given) model on DELAY windows.

    Raises:
        UsageError: windows are not DELAY windows or do not fit the variant.
        TrainingDivergedError: the loss became NaN.
    """
    if windows.task is not Task.DELAY:
        raise UsageError("pre-training needs DELAY windows")
    if params is None:
        _, params = build_variant(variant, cfg.seed, base)
    _check_compatible(params, windows)
    logger.info(
        f"pre-training {variant.value} on {len(windows)} windows "
        f"({cfg.epochs} epochs, batch {cfg.batch_size}, lr {cfg.lr:g})"
    )
    return _fit(params, list(params.store), windows, cfg, f"pretrain[{variant.value}]")


def trainable_parameters(params: NTTParams, task: Task, mode: FinetuneMode) -> List[Parameter]:
    """Parameters updated by fine-tuning: the task head, plus the body in FULL mode."""
    head = params.group("head.delay" if task is Task.DELAY else "head.mct")
    if mode is FinetuneMode.DECODER_ONLY:
        return head
    return params.body() + head


def finetune(
    params: NTTParams,
    variant: VariantKind,
    windows: WindowSet,
    task: Task,
    cfg: TrainConfig,
) -> TrainResult:
    """Adapt `params` to `windows` of `task`.

    MCT fine-tuning attaches a fresh MCT head when the model has none. In
    DECODER_ONLY mode the body is frozen: it takes no part in backward and
    receives no optimizer update.

    Raises:
        UsageError: windows belong to another task or do not fit the variant.
        TrainingDivergedError: the loss became NaN.
    """
    if windows.task is not task:
        raise UsageError(f"fine-tuning for {task.value} got {windows.task.value} windows")
    _check_compatible(params, windows)
    if task is Task.MCT and not params.has_mct_head:
        attach_mct_head(params, cfg.seed)
        logger.info("attached a fresh MCT head")

    trainable = trainable_parameters(params, task, cfg.finetune_mode)
    trainable_ids = {id(p) for p in trainable}
    frozen = [p for p in params.store if id(p) not in trainable_ids]
    logger.info(
        f"fine-tuning {variant.value} for {task.value} ({cfg.finetune_mode.value}): "
        f"{sum(p.size for p in trainable)} trainable, {sum(p.size for p in frozen)} frozen"
    )
    for p in frozen:
        p.requires_grad = False
    try:
        return _fit(params, trainable, windows, cfg, f"finetune[{variant.value}/{task.value}]")
    finally:
        for p in frozen:
            p.requires_grad = True
            p.grad = None
