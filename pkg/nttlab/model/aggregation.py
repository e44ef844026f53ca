"""
Multi-timescale aggregation of embedded packet sequences.

The window is split oldest -> newest into three regions:

    level-2 region: level2_groups x factor^2 packets, aggregated twice
    level-1 region: level1_groups x factor packets, aggregated once
    raw region:     raw_count packets, passed through unchanged

A level-1 map is a learned linear layer on the concatenation of `factor`
consecutive d-vectors; the level-2 map applies a separate linear layer to
`factor` consecutive level-1 outputs. The level-1 weights are shared between
the two regions.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict

from ..core.errors import ConfigError, ShapeError
from ..numerics.ops import concat, linear_forward, reshape, slice_
from ..numerics.tensor import Parameter, Tensor


class AggregationKind(Enum):
    MULTISCALE = "MULTISCALE"
    NONE = "NONE"  # n_slots raw packets
    FIXED = "FIXED"  # n_slots groups of fixed size, one level


@dataclass(frozen=True)
class AggregationScheme:
    raw_count: int = 16
    level1_groups: int = 22
    level2_groups: int = 10
    factor: int = 9

    def __post_init__(self):
        if min(self.raw_count, self.level1_groups, self.level2_groups) < 0 or self.factor < 2:
            raise ConfigError(f"invalid aggregation scheme {self}")
        if self.n_slots < 1:
            raise ConfigError("aggregation scheme yields no output slots")

    @classmethod
    def paper(cls) -> "AggregationScheme":
        """1024 packets -> 48 slots: 16 raw, 22 groups of 9, 10 groups of 81."""
        return cls(16, 22, 10, 9)

    @classmethod
    def tiny(cls) -> "AggregationScheme":
        """32 packets -> 12 slots (gradient-check harness)."""
        return cls(4, 2, 6, 2)

    @property
    def level2_packets(self) -> int:
        return self.level2_groups * self.factor * self.factor

    @property
    def level1_packets(self) -> int:
        return self.level1_groups * self.factor

    @property
    def window_length(self) -> int:
        return self.raw_count + self.level1_packets + self.level2_packets

    @property
    def n_slots(self) -> int:
        return self.raw_count + self.level1_groups + self.level2_groups

    def slot_of_packet(self, index: int) -> int:
        """Output slot that packet `index` (0 = oldest) contributes to."""
        if not 0 <= index < self.window_length:
            raise IndexError(f"packet index {index} outside window of {self.window_length}")
        if index < self.level2_packets:
            return index // (self.factor * self.factor)
        index -= self.level2_packets
        if index < self.level1_packets:
            return self.level2_groups + index // self.factor
        return self.level2_groups + self.level1_groups + (index - self.level1_packets)

    def to_dict(self) -> Dict[str, int]:
        return {
            "raw_count": self.raw_count,
            "level1_groups": self.level1_groups,
            "level2_groups": self.level2_groups,
            "factor": self.factor,
        }


def _grouped_linear(x: Tensor, group: int, W: Parameter, b: Parameter) -> Tensor:
    """[B, n*group, d] -> [B, n, d] by a linear map on each group's concatenation."""
    batch, length, d = x.shape
    return linear_forward(reshape(x, (batch, length // group, group * d)), W, b)


def aggregate_multiscale(E: Tensor, params: Dict[str, Parameter], scheme: AggregationScheme) -> Tensor:
    """[B, window_length, d] -> [B, n_slots, d] (before positional embedding).

    `params` holds level1.W/b [factor*d x d] and level2.W/b [factor*d x d].

    Raises:
        ShapeError: input length differs from the scheme's window length.
    """
    if E.ndim != 3 or E.shape[1] != scheme.window_length:
        raise ShapeError(f"aggregation expects [batch x {scheme.window_length} x d], got {E.shape}")
    f = scheme.factor
    l2_end = scheme.level2_packets
    l1_end = l2_end + scheme.level1_packets
    parts = []
    if scheme.level2_groups:
        oldest = slice_(E, (slice(None), slice(0, l2_end)))
        once = _grouped_linear(oldest, f, params["level1.W"], params["level1.b"])
        parts.append(_grouped_linear(once, f, params["level2.W"], params["level2.b"]))
    if scheme.level1_groups:
        middle = slice_(E, (slice(None), slice(l2_end, l1_end)))
        parts.append(_grouped_linear(middle, f, params["level1.W"], params["level1.b"]))
    if scheme.raw_count:
        parts.append(slice_(E, (slice(None), slice(l1_end, None))))
    return parts[0] if len(parts) == 1 else concat(parts, axis=1)


def aggregate_fixed(
    E: Tensor, params: Dict[str, Parameter], n_slots: int, group_size: int
) -> Tensor:
    """[B, n_slots*group_size, d] -> [B, n_slots, d] with one learned map."""
    if E.ndim != 3 or E.shape[1] != n_slots * group_size:
        raise ShapeError(f"fixed aggregation expects [batch x {n_slots * group_size} x d], got {E.shape}")
    return _grouped_linear(E, group_size, params["fixed.W"], params["fixed.b"])
