"""
Experiment plans.

An ExperimentPlan is the validated, typed form of a plan JSON document
(see json_schema/plan.schema.json). It knows how to derive every per-stage
configuration from a seed: scenario SimConfigs, model configs and
TrainConfigs.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..core.errors import ConfigError
from ..core.tasks import Task
from ..model.aggregation import AggregationScheme
from ..model.config import NTTConfig
from ..model.variants import VariantKind
from ..netsim.scenarios import build_scenario
from ..netsim.specs import ScenarioKind, Scale, SimConfig
from ..training.trainer import FinetuneMode, TrainConfig
from ..utils.config import merge_defaults, validate_config
from ..utils.integrity import config_hash, short_hash

logger = logging.getLogger(__name__)

_SCHEMES = {"PAPER": AggregationScheme.paper, "TINY": AggregationScheme.tiny}


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 1e-3
    batch_size: int = 64
    window_stride: int = 16
    pretrain_epochs: int = 20
    finetune_epochs: int = 10


@dataclass
class ExperimentPlan:
    scale: Scale
    seeds: List[int]
    scenarios: List[ScenarioKind] = field(default_factory=lambda: list(ScenarioKind))
    variants: List[VariantKind] = field(default_factory=lambda: list(VariantKind))
    tasks: List[Task] = field(default_factory=lambda: list(Task))
    output_dir: str = "runs"
    workers: int = 1
    test_fraction: float = 0.1
    subsample: float = 0.1
    train: TrainSettings = field(default_factory=TrainSettings)
    simulation: Dict[str, Any] = field(default_factory=dict)
    model: Dict[str, Any] = field(default_factory=dict)
    log_level: str = "INFO"

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("a plan needs at least one seed")
        if ScenarioKind.PRETRAIN not in self.scenarios:
            raise ConfigError("a plan must simulate the PRETRAIN scenario")
        if VariantKind.FULL not in self.variants:
            raise ConfigError("a plan must train the FULL variant")

    @classmethod
    def from_config(cls, cfg: Dict[str, Any]) -> "ExperimentPlan":
        """Build from a plan document; missing keys take the defaults.

        Raises:
            ConfigError: the document violates the plan schema.
        """
        validate_config(cfg)
        doc = merge_defaults(cfg)
        return cls(
            scale=Scale(doc["scale"]),
            seeds=[int(s) for s in doc["seeds"]],
            scenarios=[ScenarioKind(s) for s in doc["scenarios"]],
            variants=[VariantKind(v) for v in doc["variants"]],
            tasks=[Task(t) for t in doc["tasks"]],
            output_dir=doc["output_dir"],
            workers=int(doc["workers"]),
            test_fraction=float(doc["test_fraction"]),
            subsample=float(doc["subsample"]),
            train=TrainSettings(**doc["train"]),
            simulation=dict(doc.get("simulation", {})),
            model=dict(doc.get("model", {})),
            log_level=doc["log_level"],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale.value,
            "seeds": list(self.seeds),
            "scenarios": [s.value for s in self.scenarios],
            "variants": [v.value for v in self.variants],
            "tasks": [t.value for t in self.tasks],
            "output_dir": self.output_dir,
            "workers": self.workers,
            "log_level": self.log_level,
            "test_fraction": self.test_fraction,
            "subsample": self.subsample,
            "train": {
                "lr": self.train.lr,
                "batch_size": self.train.batch_size,
                "window_stride": self.train.window_stride,
                "pretrain_epochs": self.train.pretrain_epochs,
                "finetune_epochs": self.train.finetune_epochs,
            },
            "simulation": dict(self.simulation),
            "model": dict(self.model),
        }

    def experiment_dict(self) -> Dict[str, Any]:
        """Plan fields that change results (output location, workers and logging excluded)."""
        doc = self.to_dict()
        for key in ("output_dir", "workers", "log_level"):
            doc.pop(key)
        return doc

    @property
    def config_hash(self) -> str:
        return config_hash(self.experiment_dict())

    @property
    def short_hash(self) -> str:
        return short_hash(self.experiment_dict())

    def with_overrides(self, **overrides: Any) -> "ExperimentPlan":
        """Copy with CLI flag overrides applied (None values ignored)."""
        doc = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key in TrainSettings.__dataclass_fields__:
                doc["train"][key] = value
            else:
                doc[key] = value
        return ExperimentPlan.from_config(doc)

    def scenario_config(self, kind: ScenarioKind, seed: int) -> SimConfig:
        config = build_scenario(kind, self.scale, seed)
        if self.simulation:
            config = config.with_overrides(
                duration=self.simulation.get("duration"), n_runs=self.simulation.get("n_runs")
            )
        return config

    def base_model_config(self, seed: int) -> NTTConfig:
        """FULL-architecture NTTConfig with the plan's model overrides."""
        overrides = dict(self.model)
        scheme = overrides.pop("scheme", "PAPER")
        if scheme == "TINY":
            return NTTConfig.tiny(seed=seed, **overrides)
        return NTTConfig(scheme=_SCHEMES[scheme](), seed=seed, **overrides)

    def pretrain_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            lr=self.train.lr,
            batch_size=self.train.batch_size,
            epochs=self.train.pretrain_epochs,
            window_stride=self.train.window_stride,
            seed=seed,
        )

    def finetune_config(self, seed: int, mode: FinetuneMode) -> TrainConfig:
        return TrainConfig(
            lr=self.train.lr,
            batch_size=self.train.batch_size,
            epochs=self.train.finetune_epochs,
            window_stride=self.train.window_stride,
            seed=seed,
            finetune_mode=mode,
        )


def load_plan(path: Optional[str] = None) -> ExperimentPlan:
    """Plan from `path` (or the configured fallbacks, then defaults)."""
    from ..utils.config import load_config

    return ExperimentPlan.from_config(load_config(path, use_cache=False))
