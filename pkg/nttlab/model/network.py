"""
NTT forward pass: embedding -> aggregation (+ positions) -> encoder -> head.

All functions take batched tensors [B x ...]; a single window [L x F] is
treated as a batch of one.
"""

from typing import Tuple, Union

import numpy as np

from ..core.errors import ShapeError
from ..numerics.layers import encoder_block
from ..numerics.ops import add, concat, linear_forward, relu, reshape, slice_
from ..numerics.tensor import Tensor, as_tensor
from .aggregation import AggregationKind, aggregate_fixed, aggregate_multiscale
from .params import NTTParams

ArrayLike = Union[Tensor, np.ndarray]


def _batched(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    return reshape(x, (1,) + x.shape) if x.ndim == 2 else x


def embed(features: ArrayLike, params: NTTParams) -> Tensor:
    """Per-packet 2-layer MLP (F -> d -> d, ReLU); rows never mix.

    Raises:
        ShapeError: feature width differs from the schema width.
    """
    x = as_tensor(features)
    width = params.config.schema.width
    if x.shape[-1] != width:
        raise ShapeError(f"feature width {x.shape[-1]} does not match schema width {width}")
    h = relu(linear_forward(x, params["embedding.1.W"], params["embedding.1.b"]))
    return linear_forward(h, params["embedding.2.W"], params["embedding.2.b"])


def aggregate_slots(E: ArrayLike, params: NTTParams) -> Tensor:
    """[B, window, d] -> [B, n_slots, d] before the positional embedding."""
    E = _batched(E)
    config = params.config
    if config.aggregation is AggregationKind.MULTISCALE:
        return aggregate_multiscale(E, params.aggregation_params(), config.scheme)
    if config.aggregation is AggregationKind.FIXED:
        return aggregate_fixed(E, params.aggregation_params(), config.n_slots, config.fixed_group_size)
    if E.shape[1] != config.n_slots:
        raise ShapeError(f"expected {config.n_slots} raw packets, got {E.shape[1]}")
    return E


def aggregate(E: ArrayLike, params: NTTParams) -> Tensor:
    """Aggregated slots plus the learned positional embedding."""
    return add(aggregate_slots(E, params), params["positional"])


def encode(S: ArrayLike, params: NTTParams) -> Tensor:
    """n_layers pre-norm transformer blocks over the slots (identity when n_layers = 0)."""
    x = _batched(S)
    for block in params.blocks:
        x = encoder_block(x, block, params.config.n_heads, params.config.ln_eps)
    return x


def newest_slot(C: ArrayLike) -> Tensor:
    return slice_(_batched(C), (slice(None), -1))


def predict_delay(C: ArrayLike, params: NTTParams) -> Tensor:
    """MLP d -> d -> 1 on the newest slot; returns [B] (normalised delay)."""
    h = relu(linear_forward(newest_slot(C), params["head.delay.1.W"], params["head.delay.1.b"]))
    out = linear_forward(h, params["head.delay.2.W"], params["head.delay.2.b"])
    return reshape(out, (out.shape[0],))


def log_size_feature(message_size, log_size_scale: Tuple[float, float]) -> np.ndarray:
    """z-normalised ln(message_size) as a [B] array.

    Raises:
        ValueError: a message size is not positive.
    """
    sizes = np.atleast_1d(np.asarray(message_size, dtype=np.float64))
    if np.any(sizes <= 0):
        raise ValueError("message_size must be > 0")
    mean, std = log_size_scale
    return (np.log(sizes) - mean) / std


def predict_log_mct_normalized(C: ArrayLike, log_size_z: np.ndarray, params: NTTParams) -> Tensor:
    """MLP on concat(newest slot, normalised ln size) -> [B] (normalised ln MCT)."""
    if not params.has_mct_head:
        raise ShapeError("model has no MCT head; attach one before predicting MCT")
    slot = newest_slot(C)
    size_col = Tensor(np.asarray(log_size_z, dtype=np.float64).reshape(-1, 1))
    if size_col.shape[0] != slot.shape[0]:
        raise ShapeError(f"{size_col.shape[0]} message sizes for a batch of {slot.shape[0]}")
    joined = concat([slot, size_col], axis=1)
    h = relu(linear_forward(joined, params["head.mct.1.W"], params["head.mct.1.b"]))
    out = linear_forward(h, params["head.mct.2.W"], params["head.mct.2.b"])
    return reshape(out, (out.shape[0],))


def predict_log_mct(
    C: ArrayLike, message_size, params: NTTParams, log_size_scale: Tuple[float, float] = (0.0, 1.0)
) -> Tensor:
    """Head output for messages of `message_size` bytes given encoder output C."""
    return predict_log_mct_normalized(C, log_size_feature(message_size, log_size_scale), params)


def encode_window(features: ArrayLike, params: NTTParams) -> Tensor:
    """Embedding, aggregation and encoder: [B, L, F] -> [B, n_slots, d]."""
    return encode(aggregate(embed(_batched(features), params), params), params)


def forward_delay(features: ArrayLike, params: NTTParams) -> Tensor:
    return predict_delay(encode_window(features, params), params)


def forward_mct(features: ArrayLike, log_size_z: np.ndarray, params: NTTParams) -> Tensor:
    return predict_log_mct_normalized(encode_window(features, params), log_size_z, params)
