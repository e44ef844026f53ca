"""
Transformer building blocks: multi-head self-attention, position-wise
feed-forward, and parameter initialisation helpers.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..core.errors import ConfigError, ShapeError
from .ops import add, layer_norm, linear_forward, matmul, permute, relu, reshape, scale, softmax
from .tensor import Parameter, Tensor, as_tensor


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    """U(-sqrt(1/fan_in), +sqrt(1/fan_in))."""
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def linear_params(
    rng: np.random.Generator, name: str, d_in: int, d_out: int
) -> Tuple[Parameter, Parameter]:
    """Weight [d_in x d_out] (uniform fan-in init) and zero bias [d_out]."""
    return (
        Parameter(uniform_init(rng, d_in, (d_in, d_out)), f"{name}.W"),
        Parameter(np.zeros(d_out), f"{name}.b"),
    )


@dataclass
class AttentionParams:
    Wq: Parameter
    bq: Parameter
    Wk: Parameter
    bk: Parameter
    Wv: Parameter
    bv: Parameter
    Wo: Parameter
    bo: Parameter

    @classmethod
    def init(cls, rng: np.random.Generator, name: str, d_model: int) -> "AttentionParams":
        Wq, bq = linear_params(rng, f"{name}.q", d_model, d_model)
        Wk, bk = linear_params(rng, f"{name}.k", d_model, d_model)
        Wv, bv = linear_params(rng, f"{name}.v", d_model, d_model)
        Wo, bo = linear_params(rng, f"{name}.o", d_model, d_model)
        return cls(Wq, bq, Wk, bk, Wv, bv, Wo, bo)

    def parameters(self) -> List[Parameter]:
        return [self.Wq, self.bq, self.Wk, self.bk, self.Wv, self.bv, self.Wo, self.bo]


@dataclass
class FeedForwardParams:
    W1: Parameter
    b1: Parameter
    W2: Parameter
    b2: Parameter

    @classmethod
    def init(cls, rng: np.random.Generator, name: str, d_model: int, d_ff: int) -> "FeedForwardParams":
        W1, b1 = linear_params(rng, f"{name}.1", d_model, d_ff)
        W2, b2 = linear_params(rng, f"{name}.2", d_ff, d_model)
        return cls(W1, b1, W2, b2)

    def parameters(self) -> List[Parameter]:
        return [self.W1, self.b1, self.W2, self.b2]


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    b, n, d = x.shape
    return permute(reshape(x, (b, n, n_heads, d // n_heads)), (0, 2, 1, 3))


def multi_head_attention(
    x,
    params: AttentionParams,
    n_heads: int,
    return_weights: bool = False,
):
    """Scaled dot-product self-attention over all positions, heads concatenated.

    Accepts [n x d] or [batch x n x d]. With `return_weights` the attention
    weights [batch x heads x n x n] are returned alongside the output.

    Raises:
        ConfigError: d not divisible by n_heads.
    """
    x = as_tensor(x)
    squeeze = x.ndim == 2
    if squeeze:
        x = reshape(x, (1,) + x.shape)
    if x.ndim != 3:
        raise ShapeError(f"attention input must be [n x d] or [batch x n x d], got {x.shape}")
    b, n, d = x.shape
    if n_heads < 1 or d % n_heads != 0:
        raise ConfigError(f"d_model={d} is not divisible by n_heads={n_heads}")
    d_head = d // n_heads

    q = _split_heads(linear_forward(x, params.Wq, params.bq), n_heads)
    k = _split_heads(linear_forward(x, params.Wk, params.bk), n_heads)
    v = _split_heads(linear_forward(x, params.Wv, params.bv), n_heads)

    scores = scale(matmul(q, permute(k, (0, 1, 3, 2))), 1.0 / math.sqrt(d_head))
    weights = softmax(scores, axis=-1)
    heads = matmul(weights, v)  # [b, h, n, d_head]
    merged = reshape(permute(heads, (0, 2, 1, 3)), (b, n, d))
    out = linear_forward(merged, params.Wo, params.bo)
    if squeeze:
        out = reshape(out, (n, d))
    if return_weights:
        return out, weights.numpy()
    return out


def feed_forward(x, params: FeedForwardParams) -> Tensor:
    """linear -> ReLU -> linear, applied position-wise."""
    return linear_forward(relu(linear_forward(x, params.W1, params.b1)), params.W2, params.b2)


@dataclass
class EncoderBlockParams:
    ln1_gain: Parameter
    ln1_bias: Parameter
    attention: AttentionParams
    ln2_gain: Parameter
    ln2_bias: Parameter
    ffn: FeedForwardParams

    @classmethod
    def init(cls, rng: np.random.Generator, name: str, d_model: int, d_ff: int) -> "EncoderBlockParams":
        return cls(
            ln1_gain=Parameter(np.ones(d_model), f"{name}.ln1.gain"),
            ln1_bias=Parameter(np.zeros(d_model), f"{name}.ln1.bias"),
            attention=AttentionParams.init(rng, f"{name}.attn", d_model),
            ln2_gain=Parameter(np.ones(d_model), f"{name}.ln2.gain"),
            ln2_bias=Parameter(np.zeros(d_model), f"{name}.ln2.bias"),
            ffn=FeedForwardParams.init(rng, f"{name}.ffn", d_model, d_ff),
        )

    def parameters(self) -> List[Parameter]:
        return (
            [self.ln1_gain, self.ln1_bias]
            + self.attention.parameters()
            + [self.ln2_gain, self.ln2_bias]
            + self.ffn.parameters()
        )


def encoder_block(x: Tensor, params: EncoderBlockParams, n_heads: int, eps: float = 1e-6) -> Tensor:
    """Pre-norm block: x + MHA(LN(x)), then + FFN(LN(.))."""
    normed = layer_norm(x, params.ln1_gain, params.ln1_bias, eps)
    h = add(x, multi_head_attention(normed, params.attention, n_heads))
    return add(h, feed_forward(layer_norm(h, params.ln2_gain, params.ln2_bias, eps), params.ffn))


def attention_weights(x, params: AttentionParams, n_heads: int) -> np.ndarray:
    """Attention weights only (diagnostics and tests)."""
    _, weights = multi_head_attention(x, params, n_heads, return_weights=True)
    return weights
