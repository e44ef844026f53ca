"""Architecture hyperparameters of one NTT variant."""

from dataclasses import dataclass, field
from typing import Any, Dict

from ..core.errors import ConfigError
from .aggregation import AggregationKind, AggregationScheme
from .features import FeatureSchema


@dataclass(frozen=True)
class NTTConfig:
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 3
    d_ff: int = 128
    schema: FeatureSchema = field(default_factory=FeatureSchema)
    aggregation: AggregationKind = AggregationKind.MULTISCALE
    scheme: AggregationScheme = field(default_factory=AggregationScheme.paper)
    fixed_group_size: int = 21
    ln_eps: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.d_model < 1 or self.n_heads < 1 or self.d_model % self.n_heads:
            raise ConfigError(
                f"d_model={self.d_model} must be a positive multiple of n_heads={self.n_heads}"
            )
        if self.n_layers < 0 or self.d_ff < 1:
            raise ConfigError("n_layers must be >= 0 and d_ff >= 1")
        if self.fixed_group_size < 1:
            raise ConfigError("fixed_group_size must be >= 1")

    @classmethod
    def tiny(cls, **overrides) -> "NTTConfig":
        """d_model 8, 2 heads, 1 layer over 32-packet windows."""
        base: Dict[str, Any] = dict(
            d_model=8,
            n_heads=2,
            n_layers=1,
            d_ff=16,
            scheme=AggregationScheme.tiny(),
            fixed_group_size=2,
        )
        base.update(overrides)
        return cls(**base)

    @property
    def n_slots(self) -> int:
        return self.scheme.n_slots

    @property
    def window_length(self) -> int:
        if self.aggregation is AggregationKind.NONE:
            return self.n_slots
        if self.aggregation is AggregationKind.FIXED:
            return self.n_slots * self.fixed_group_size
        return self.scheme.window_length

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "n_layers": self.n_layers,
            "d_ff": self.d_ff,
            "schema": self.schema.to_dict(),
            "aggregation": self.aggregation.value,
            "scheme": self.scheme.to_dict(),
            "fixed_group_size": self.fixed_group_size,
            "ln_eps": self.ln_eps,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NTTConfig":
        return cls(
            d_model=int(data["d_model"]),
            n_heads=int(data["n_heads"]),
            n_layers=int(data["n_layers"]),
            d_ff=int(data["d_ff"]),
            schema=FeatureSchema.from_dict(data["schema"]),
            aggregation=AggregationKind(data["aggregation"]),
            scheme=AggregationScheme(**data["scheme"]),
            fixed_group_size=int(data["fixed_group_size"]),
            ln_eps=float(data["ln_eps"]),
            seed=int(data["seed"]),
        )
