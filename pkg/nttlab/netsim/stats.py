"""Summary statistics of a packet trace (nearest-rank percentiles)."""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, Sequence

import numpy as np

from ..core.errors import EmptyDatasetError
from ..core.trace import TraceDataset, derive_mct_records

PERCENTILES = ("50", "90", "99", "99.9")


def nearest_rank(sorted_values: np.ndarray, percentile: str) -> float:
    """Smallest value with at least `percentile`% of the sample at or below it."""
    n = len(sorted_values)
    rank = math.ceil(Fraction(percentile) * n / 100)
    return float(sorted_values[max(rank, 1) - 1])


def _summary(values: Sequence[float]) -> Dict[str, float]:
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    out = {"mean": float(ordered.mean())}
    for p in PERCENTILES:
        out[f"p{p}"] = nearest_rank(ordered, p)
    return out


@dataclass(frozen=True)
class TraceStats:
    packet_count: int
    n_runs: int
    n_messages: int
    delay: Dict[str, float]
    mct: Dict[str, float]
    drop_gaps: int  # packet_seq values missing from the trace (dropped packets)
    gap_rate: float

    def to_dict(self) -> Dict:
        return asdict(self)

    def summary_line(self) -> str:
        return (
            f"packets={self.packet_count} runs={self.n_runs} messages={self.n_messages} "
            f"delay_mean={self.delay['mean']:.6f}s delay_p99={self.delay['p99']:.6f}s "
            f"mct_mean={self.mct['mean']:.6f}s mct_p99.9={self.mct['p99.9']:.6f}s "
            f"gap_rate={self.gap_rate:.4f}"
        )


def trace_stats(dataset: TraceDataset) -> TraceStats:
    """Packet count, delay and MCT distributions, and drop-inferred sequence gaps."""
    if not dataset.records:
        raise EmptyDatasetError()

    gaps = 0
    span = 0
    for arrays in dataset.all_run_arrays():
        seq = arrays.packet_seq
        run_span = int(seq[-1] - seq[0]) + 1
        span += run_span
        gaps += run_span - len(seq)

    mct = derive_mct_records(dataset)
    return TraceStats(
        packet_count=dataset.packet_count(),
        n_runs=len(dataset.sim_ids()),
        n_messages=len(mct),
        delay=_summary([r.delay for r in dataset.records]),
        mct=_summary([m.mct for m in mct]),
        drop_gaps=gaps,
        gap_rate=gaps / span,
    )
