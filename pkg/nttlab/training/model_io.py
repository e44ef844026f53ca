"""
Trained-model checkpoints.

A checkpoint holds the parameter arrays plus metadata: the architecture
(NTTConfig), the frozen Normalizer, the variant, and the seed and config hash
of the run that produced it.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

from ..core.errors import CheckpointError
from ..model.config import NTTConfig
from ..model.params import NTTParams
from ..model.variants import VariantKind
from ..numerics.checkpoint import load_checkpoint, save_checkpoint
from .normalizer import Normalizer

logger = logging.getLogger(__name__)


@dataclass
class TrainedModel:
    params: NTTParams
    normalizer: Normalizer
    variant: VariantKind
    meta: Dict[str, Any]


def save_model(
    path: str,
    params: NTTParams,
    normalizer: Normalizer,
    variant: VariantKind,
    **extra: Any,
) -> int:
    """Write params and metadata; `extra` (seed, config_hash, stage, ...) goes into meta."""
    meta = {
        "ntt_config": params.config.to_dict(),
        "normalizer": normalizer.to_dict(),
        "variant": variant.value,
    }
    meta.update(extra)
    return save_checkpoint(path, params.arrays(), meta)


def load_model(path: str, config: Optional[NTTConfig] = None) -> TrainedModel:
    """Read a checkpoint, optionally into the architecture `config` instead of the stored one.

    Raises:
        CheckpointError: unreadable file, missing metadata, or arrays that do
            not fit the architecture (the mismatched shapes are named).
    """
    arrays, meta = load_checkpoint(path)
    try:
        stored = NTTConfig.from_dict(meta["ntt_config"])
        normalizer = Normalizer.from_dict(meta["normalizer"])
        variant = VariantKind(meta["variant"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: checkpoint metadata incomplete ({e})") from e
    target = config or stored
    params = NTTParams.from_arrays(target, arrays, seed=target.seed)
    logger.info(f"Loaded {variant.value} checkpoint {path} ({params.store.count()} parameters)")
    return TrainedModel(params=params, normalizer=normalizer, variant=variant, meta=meta)
