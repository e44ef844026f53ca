"""Model variants: the full NTT and its ablations."""

import logging
from dataclasses import replace
from enum import Enum
from typing import Optional, Tuple

from .aggregation import AggregationKind
from .config import NTTConfig
from .features import FeatureSchema
from .params import NTTParams

logger = logging.getLogger(__name__)


class VariantKind(Enum):
    FULL = "FULL"
    NO_AGG = "NO_AGG"  # newest n_slots packets, no aggregation layer
    FIXED_AGG = "FIXED_AGG"  # n_slots equal groups, one aggregation level
    NO_DELAY = "NO_DELAY"
    NO_SIZE = "NO_SIZE"


def variant_config(kind: VariantKind, seed: int, base: Optional[NTTConfig] = None) -> NTTConfig:
    """Configuration of `kind`, derived from `base` (default architecture if None)."""
    base = base or NTTConfig()
    schema = base.schema
    aggregation = AggregationKind.MULTISCALE
    if kind is VariantKind.NO_AGG:
        aggregation = AggregationKind.NONE
    elif kind is VariantKind.FIXED_AGG:
        aggregation = AggregationKind.FIXED
    elif kind is VariantKind.NO_DELAY:
        schema = FeatureSchema(use_size=True, use_delay=False, n_receivers=schema.n_receivers)
    elif kind is VariantKind.NO_SIZE:
        schema = FeatureSchema(use_size=False, use_delay=True, n_receivers=schema.n_receivers)
    return replace(base, schema=schema, aggregation=aggregation, seed=seed)


def build_variant(
    kind: VariantKind, seed: int, base: Optional[NTTConfig] = None
) -> Tuple[NTTConfig, NTTParams]:
    """Config and freshly initialised parameters of one variant."""
    config = variant_config(kind, seed, base)
    params = NTTParams.initialize(config, seed)
    logger.debug(
        f"variant {kind.value}: window {config.window_length}, "
        f"{config.schema.width} features, {params.store.count()} parameters"
    )
    return config, params
