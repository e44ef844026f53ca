"""
Scenario description types for the packet simulator.

A SimConfig is a directed link list (drop-tail FIFO per link), one open-loop
message workload and zero or more TCP cross-traffic aggregates. It serialises
to the JSON document described by `json_schema/sim_config.schema.json`.
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from ..core.errors import ConfigError


class ScenarioKind(Enum):
    """Dataset scenarios: base pre-training network and the two fine-tuning cases."""

    PRETRAIN = "PRETRAIN"
    CASE1 = "CASE1"  # + TCP cross-traffic on the bottleneck
    CASE2 = "CASE2"  # + larger topology with per-path cross-traffic


class Scale(Enum):
    PAPER = "PAPER"
    DESK = "DESK"


class SizeKind(Enum):
    POINT = "POINT"
    LOGNORMAL = "LOGNORMAL"


@dataclass(frozen=True)
class LinkSpec:
    """Directed link with a drop-tail FIFO queue at its head."""

    from_node: str
    to_node: str
    bandwidth: float  # bits/second
    prop_delay: float  # seconds
    queue_capacity: int  # packets waiting (excluding the one being serialised)

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigError(f"link {self.from_node}->{self.to_node}: bandwidth must be > 0")
        if not self.prop_delay >= 0:
            raise ConfigError(f"link {self.from_node}->{self.to_node}: prop_delay must be >= 0")
        if self.queue_capacity < 1:
            raise ConfigError(f"link {self.from_node}->{self.to_node}: queue_capacity must be >= 1")


@dataclass(frozen=True)
class SizeDistribution:
    """Message-size distribution descriptor.

    LOGNORMAL is truncated to [min_size, max_size]; POINT always yields `value`.
    """

    kind: SizeKind = SizeKind.LOGNORMAL
    mu: float = 8.294049640102028  # ln(4000)
    sigma: float = 2.0
    min_size: int = 100
    max_size: int = 2_000_000
    value: int = 1500

    def __post_init__(self):
        if self.kind is SizeKind.LOGNORMAL:
            if not self.sigma > 0:
                raise ConfigError("size distribution sigma must be > 0")
            if not 1 <= self.min_size < self.max_size:
                raise ConfigError("size distribution needs 1 <= min_size < max_size")
        elif self.value < 1:
            raise ConfigError("point-mass message size must be >= 1")

    @classmethod
    def point(cls, value: int) -> "SizeDistribution":
        return cls(kind=SizeKind.POINT, value=value)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is SizeKind.POINT:
            return {"kind": "POINT", "value": self.value}
        return {
            "kind": "LOGNORMAL",
            "mu": self.mu,
            "sigma": self.sigma,
            "min_size": self.min_size,
            "max_size": self.max_size,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SizeDistribution":
        kind = SizeKind(data["kind"])
        if kind is SizeKind.POINT:
            return cls.point(int(data["value"]))
        defaults = cls()
        return cls(
            kind=kind,
            mu=float(data.get("mu", defaults.mu)),
            sigma=float(data.get("sigma", defaults.sigma)),
            min_size=int(data.get("min_size", defaults.min_size)),
            max_size=int(data.get("max_size", defaults.max_size)),
        )


@dataclass(frozen=True)
class WorkloadSpec:
    """Open-loop message senders; sender i sits at node `senders[i]`."""

    n_senders: int
    per_sender_rate: float  # bits/second of offered messages
    size_dist: SizeDistribution
    start_jitter: float  # seconds, uniform application start offset bound
    mss: int  # bytes
    senders: List[str] = field(default_factory=list)
    receivers: List[str] = field(default_factory=lambda: ["r0"])

    def __post_init__(self):
        if self.n_senders < 1:
            raise ConfigError("workload needs n_senders >= 1")
        if not self.per_sender_rate > 0:
            raise ConfigError("workload per_sender_rate must be > 0")
        if self.mss < 1:
            raise ConfigError("workload mss must be > 0")
        if self.start_jitter < 0:
            raise ConfigError("workload start_jitter must be >= 0")
        if not self.receivers:
            raise ConfigError("workload needs at least one receiver")
        if self.senders and len(self.senders) != self.n_senders:
            raise ConfigError(
                f"workload lists {len(self.senders)} sender nodes for n_senders={self.n_senders}"
            )

    def sender_node(self, index: int) -> str:
        return self.senders[index] if self.senders else f"h{index}"


@dataclass(frozen=True)
class CrossTrafficSpec:
    """Aggregate of greedy TCP flows entering at `entry_node`, leaving at `exit_node`."""

    n_flows: int
    aggregate_target: float  # bits/second
    entry_node: str
    exit_node: str
    mss: int = 1500

    def __post_init__(self):
        if self.n_flows < 0:
            raise ConfigError("cross-traffic n_flows must be >= 0")
        if self.aggregate_target < 0:
            raise ConfigError("cross-traffic aggregate_target must be >= 0")
        if self.mss < 1:
            raise ConfigError("cross-traffic mss must be > 0")

    @property
    def per_flow_rate(self) -> float:
        return self.aggregate_target / self.n_flows if self.n_flows else 0.0


@dataclass(frozen=True)
class SimConfig:
    """Complete scenario: topology, workload, cross-traffic, run plan."""

    scenario: ScenarioKind
    links: List[LinkSpec]
    workload: WorkloadSpec
    cross_traffic: List[CrossTrafficSpec]
    duration: float
    n_runs: int
    seed: int

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("duration must be > 0")
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if not self.links:
            raise ConfigError("a scenario needs at least one link")

    def to_dict(self) -> Dict[str, Any]:
        workload = asdict(self.workload)
        workload["size_dist"] = self.workload.size_dist.to_dict()
        workload["senders"] = [
            self.workload.sender_node(i) for i in range(self.workload.n_senders)
        ]
        return {
            "scenario": self.scenario.value,
            "links": [asdict(link) for link in self.links],
            "workload": workload,
            "cross_traffic": [asdict(c) for c in self.cross_traffic],
            "duration": self.duration,
            "n_runs": self.n_runs,
            "seed": self.seed,
        }

    def with_overrides(
        self, duration: Optional[float] = None, n_runs: Optional[int] = None
    ) -> "SimConfig":
        """Copy with a shorter duration / fewer runs (smoke plans)."""
        return SimConfig(
            scenario=self.scenario,
            links=list(self.links),
            workload=self.workload,
            cross_traffic=list(self.cross_traffic),
            duration=self.duration if duration is None else duration,
            n_runs=self.n_runs if n_runs is None else n_runs,
            seed=self.seed,
        )


def sim_config_to_json(config: SimConfig) -> Dict[str, Any]:
    return config.to_dict()


def sim_config_from_json(doc: Dict[str, Any]) -> SimConfig:
    """Build a SimConfig from its JSON document (schema-validated first)."""
    from ..utils.config import validate_document

    validate_document(doc, "sim_config")
    w = doc["workload"]
    workload = WorkloadSpec(
        n_senders=int(w["n_senders"]),
        per_sender_rate=float(w["per_sender_rate"]),
        size_dist=SizeDistribution.from_dict(w["size_dist"]),
        start_jitter=float(w["start_jitter"]),
        mss=int(w["mss"]),
        senders=list(w.get("senders", [])),
        receivers=list(w["receivers"]),
    )
    return SimConfig(
        scenario=ScenarioKind(doc["scenario"]),
        links=[LinkSpec(**link) for link in doc["links"]],
        workload=workload,
        cross_traffic=[CrossTrafficSpec(**c) for c in doc["cross_traffic"]],
        duration=float(doc["duration"]),
        n_runs=int(doc["n_runs"]),
        seed=int(doc["seed"]),
    )
