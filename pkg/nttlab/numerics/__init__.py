"""
Differentiable-computation substrate (float64 numpy).

- tensor: Tensor / Parameter / ParameterSet and reverse-mode `backward`
- ops: elementwise, matmul, linear, relu, softmax, layer_norm, shape ops, mse
- layers: multi-head attention, feed-forward, pre-norm encoder block
- optim: Adam
- gradcheck: central-difference gradient checker
- checkpoint: nttlab-ckpt-1 binary format
"""

from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .gradcheck import GradcheckReport, finite_diff_gradcheck
from .layers import (
    AttentionParams,
    EncoderBlockParams,
    FeedForwardParams,
    encoder_block,
    feed_forward,
    multi_head_attention,
)
from .ops import layer_norm, linear_forward, mse_loss, relu, softmax
from .optim import AdamState, adam_step
from .tensor import Parameter, ParameterSet, Tensor, backward

__all__ = [
    "CHECKPOINT_VERSION",
    "AdamState",
    "AttentionParams",
    "EncoderBlockParams",
    "FeedForwardParams",
    "GradcheckReport",
    "Parameter",
    "ParameterSet",
    "Tensor",
    "adam_step",
    "backward",
    "encoder_block",
    "feed_forward",
    "finite_diff_gradcheck",
    "layer_norm",
    "linear_forward",
    "load_checkpoint",
    "mse_loss",
    "multi_head_attention",
    "relu",
    "save_checkpoint",
    "softmax",
]
