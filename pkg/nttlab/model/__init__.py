"""
The Network Traffic Transformer.

- features: FeatureSchema, SequenceWindow, featurize_window, mask_last_delay
- aggregation: multi-timescale and fixed aggregation schemes
- config / params: NTTConfig and grouped NTTParams
- network: embed, aggregate, encode, prediction heads
- variants: FULL and the ablations
- baselines: last observed and EWMA predictors
"""

from .aggregation import AggregationKind, AggregationScheme, aggregate_multiscale
from .baselines import EWMA_ALPHA, BaselineKind, baseline_predict
from .config import NTTConfig
from .features import FeatureSchema, SequenceWindow, featurize_window, mask_last_delay
from .network import aggregate, embed, encode, predict_delay, predict_log_mct
from .params import NTTParams, attach_mct_head
from .variants import VariantKind, build_variant

__all__ = [
    "EWMA_ALPHA",
    "AggregationKind",
    "AggregationScheme",
    "BaselineKind",
    "FeatureSchema",
    "NTTConfig",
    "NTTParams",
    "SequenceWindow",
    "VariantKind",
    "aggregate",
    "aggregate_multiscale",
    "attach_mct_head",
    "baseline_predict",
    "build_variant",
    "embed",
    "encode",
    "featurize_window",
    "mask_last_delay",
    "predict_delay",
    "predict_log_mct",
]
