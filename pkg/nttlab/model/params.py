"""
Learnable parameters of an NTT variant, grouped for fine-tuning.

Groups (name prefixes): embedding, aggregation, positional, encoder,
head.delay, head.mct. Initialisation is U(-sqrt(1/fan_in), +sqrt(1/fan_in))
for weights, zero biases and zero positional embeddings; LayerNorm gains
start at one.
"""

import logging
from typing import Dict, List

import numpy as np

from ..core.errors import CheckpointError, ShapeError
from ..numerics.layers import EncoderBlockParams, linear_params
from ..numerics.tensor import Parameter, ParameterSet
from ..utils.seeding import INIT, substream
from .aggregation import AggregationKind
from .config import NTTConfig

logger = logging.getLogger(__name__)

GROUPS = ("embedding", "aggregation", "positional", "encoder", "head.delay", "head.mct")
HEAD_GROUPS = ("head.delay", "head.mct")

# Substream key of the MCT head, so attaching it never shifts the body's draws.
_MCT_HEAD_KEY = 1


class NTTParams:
    """All parameters of one model plus structured views used by the forward pass."""

    def __init__(self, config: NTTConfig, store: ParameterSet, blocks: List[EncoderBlockParams]):
        self.config = config
        self.store = store
        self.blocks = blocks

    @classmethod
    def initialize(cls, config: NTTConfig, seed: int) -> "NTTParams":
        rng = substream(seed, INIT)
        d = config.d_model
        store = ParameterSet()
        for p in linear_params(rng, "embedding.1", config.schema.width, d):
            store.add(p)
        for p in linear_params(rng, "embedding.2", d, d):
            store.add(p)

        f = config.scheme.factor
        if config.aggregation is AggregationKind.MULTISCALE:
            for p in linear_params(rng, "aggregation.level1", f * d, d):
                store.add(p)
            for p in linear_params(rng, "aggregation.level2", f * d, d):
                store.add(p)
        elif config.aggregation is AggregationKind.FIXED:
            for p in linear_params(rng, "aggregation.fixed", config.fixed_group_size * d, d):
                store.add(p)

        store.add(Parameter(np.zeros((config.n_slots, d)), "positional"))

        blocks = []
        for i in range(config.n_layers):
            block = EncoderBlockParams.init(rng, f"encoder.{i}", d, config.d_ff)
            for p in block.parameters():
                store.add(p)
            blocks.append(block)

        for p in linear_params(rng, "head.delay.1", d, d):
            store.add(p)
        for p in linear_params(rng, "head.delay.2", d, 1):
            store.add(p)

        logger.debug(f"initialised {store.count()} parameters (seed {seed})")
        return cls(config, store, blocks)

    def __getitem__(self, name: str) -> Parameter:
        return self.store[name]

    @property
    def has_mct_head(self) -> bool:
        return "head.mct.1.W" in self.store

    def group(self, name: str) -> List[Parameter]:
        if name not in GROUPS:
            raise ValueError(f"unknown parameter group {name!r}")
        return [p for p in self.store if p.name == name or p.name.startswith(name + ".")]

    def body(self) -> List[Parameter]:
        """Everything except the decoder heads."""
        return [p for p in self.store if not p.name.startswith("head.")]

    def aggregation_params(self) -> Dict[str, Parameter]:
        return {p.name[len("aggregation.") :]: p for p in self.group("aggregation")}

    def arrays(self) -> Dict[str, np.ndarray]:
        return self.store.arrays()

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        """Assign stored values by name.

        Raises:
            CheckpointError: missing names or mismatched shapes (both shapes named).
        """
        try:
            self.store.load_arrays(arrays, strict=True)
        except KeyError as e:
            raise CheckpointError(f"checkpoint lacks {e.args[0]} for this variant") from e
        except ShapeError as e:
            raise CheckpointError(f"checkpoint incompatible with variant: {e}") from e
        extra = sorted(set(arrays) - set(self.store.names()))
        if extra:
            raise CheckpointError(f"checkpoint has parameters unknown to this variant: {extra[:5]}")

    @classmethod
    def from_arrays(cls, config: NTTConfig, arrays: Dict[str, np.ndarray], seed: int = 0) -> "NTTParams":
        params = cls.initialize(config, seed)
        if any(name.startswith("head.mct.") for name in arrays):
            attach_mct_head(params, seed)
        params.load_arrays(arrays)
        return params

    def copy(self) -> "NTTParams":
        clone = NTTParams.initialize(self.config, 0)
        if self.has_mct_head:
            attach_mct_head(clone, 0)
        clone.load_arrays(self.arrays())
        return clone


def attach_mct_head(params: NTTParams, seed: int) -> NTTParams:
    """Add a freshly initialised MCT head (replacing any existing one).

    Input of the head is the newest slot concatenated with the normalised
    log message size, so its first layer is [(d+1) x d].
    """
    d = params.config.d_model
    params.store.remove_prefix("head.mct.")
    rng = substream(seed, INIT, _MCT_HEAD_KEY)
    for p in linear_params(rng, "head.mct.1", d + 1, d):
        params.store.add(p)
    for p in linear_params(rng, "head.mct.2", d, 1):
        params.store.add(p)
    return params
