"""
Experiment matrix.

For every seed of a plan: simulate the scenarios, pre-train every variant,
fine-tune on CASE1 (full and subsampled train split) and CASE2, and score
models and baselines on held-out runs. All rows of a seed are scored on the
same test targets, those of the longest variant window. Cells come out in
three tables:

- table1: one row per model/baseline, columns pretrain_delay, finetune_delay, log_mct
- table2: CASE1, {pre-trained DECODER_ONLY, from-scratch FULL} x {full, subsample}
- table3: the same comparison on CASE2

A failing stage marks its cells FAILED and the matrix carries on. Seeds are
independent jobs and may run in parallel; results are merged in seed order.
"""

import csv
import io
import logging
import os
import time
from dataclasses import asdict, dataclass
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..core.errors import EmptyDatasetError
from ..core.run_pool import RunPool
from ..core.tasks import Task
from ..core.trace import TraceDataset, make_split
from ..model.config import NTTConfig
from ..model.params import NTTParams
from ..model.variants import VariantKind, build_variant, variant_config
from ..netsim.engine import run_simulation
from ..netsim.specs import ScenarioKind
from ..predictors.factory import PredictorFactory
from ..training.evaluate import EvalReport, evaluate, evaluate_predictor
from ..training.model_io import save_model
from ..training.normalizer import Normalizer, fit_normalizer
from ..training.trainer import FinetuneMode, TrainResult, finetune, pretrain
from ..training.windows import WindowSet, audit_leakage, make_windows
from ..utils.fsio import atomic_write_json, atomic_write_text
from .artifacts import write_trace_artifact
from .plan import ExperimentPlan
from .stage_guard import StageGuard

logger = logging.getLogger(__name__)

TABLE1 = "table1"
TABLE2 = "table2"
TABLE3 = "table3"

PRETRAIN_DELAY = "pretrain_delay"
FINETUNE_DELAY = "finetune_delay"
LOG_MCT = "log_mct"
DELAY = "delay"

PRETRAINED = "Pre-trained"
FROM_SCRATCH = "From scratch"
LAST_OBSERVED = "Last observed"
EWMA = "EWMA"

VARIANT_ROWS = {
    VariantKind.FULL: PRETRAINED,
    VariantKind.NO_AGG: "No aggregation",
    VariantKind.FIXED_AGG: "Fixed aggregation",
    VariantKind.NO_SIZE: "Without packet size",
    VariantKind.NO_DELAY: "Without delay",
}
BASELINE_ROWS = {"LAST_OBSERVED": LAST_OBSERVED, "EWMA": EWMA}
TABLE1_ROWS = [
    PRETRAINED,
    FROM_SCRATCH,
    LAST_OBSERVED,
    EWMA,
    "No aggregation",
    "Fixed aggregation",
    "Without packet size",
    "Without delay",
]
TABLE1_COLUMNS = [PRETRAIN_DELAY, FINETUNE_DELAY, LOG_MCT]
COMPARISON_COLUMNS = [DELAY, LOG_MCT]

LAYERS_TRAINED = {FinetuneMode.DECODER_ONLY: "Decoder only", FinetuneMode.FULL: "Full NTT"}

OK = "OK"
FAILED = "FAILED"


@dataclass
class MatrixCell:
    table: str
    row: str
    column: str
    seed: int
    status: str
    config_hash: str
    mse: Optional[float] = None
    n_examples: Optional[int] = None
    cause: Optional[str] = None
    stage: str = ""
    layers_trained: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def data_label(fraction: Optional[float]) -> str:
    return "full" if fraction is None else f"{fraction:.0%}"


def comparison_row(start: str, fraction: Optional[float]) -> str:
    """Comparison-table row label, e.g. 'Pre-trained (full)' or 'From scratch (10%)'."""
    return f"{start} ({data_label(fraction)})"


def _suffix(fraction: Optional[float]) -> str:
    return "" if fraction is None else "@small"


def _file_name(stage_key: str) -> str:
    return stage_key.replace("/", "-").replace("@", "-").lower()


class SeedRun:
    """All stages of one seed; every stage goes through the guard."""

    def __init__(self, plan: ExperimentPlan, seed: int):
        self.plan = plan
        self.seed = seed
        self.guard = StageGuard()
        self.cells: List[MatrixCell] = []
        self.datasets: Dict[str, Dict[str, Any]] = {}
        self.directory = os.path.join(plan.output_dir, f"seed-{seed}")
        self.base = plan.base_model_config(seed)
        # test windows of every row end where the longest variant window could
        self.target_length = max(
            [self.base.window_length]
            + [variant_config(v, seed, self.base).window_length for v in plan.variants]
        )
        self._windows: Dict[Tuple, WindowSet] = {}

    def _value(self, key: str) -> Any:
        outcome = self.guard.get(key)
        return outcome.value if outcome is not None and outcome.ok else None

    def _cell(
        self,
        table: str,
        row: str,
        column: str,
        key: str,
        score: Callable[[], EvalReport],
        depends_on: List[str],
        layers_trained: Optional[str] = None,
    ) -> None:
        # a model scored for two tables is scored once
        outcome = self.guard.get(key) or self.guard.run(key, score, depends_on)
        cell = MatrixCell(
            table=table,
            row=row,
            column=column,
            seed=self.seed,
            status=OK if outcome.ok else FAILED,
            config_hash=self.plan.config_hash,
            stage=key,
            layers_trained=layers_trained,
        )
        if outcome.ok:
            cell.mse = outcome.value.mse
            cell.n_examples = outcome.value.n_examples
        else:
            cell.cause = outcome.cause
        self.cells.append(cell)

    def _windows_for(
        self, split_key: str, config: NTTConfig, task: Task, aligned: bool = False
    ) -> WindowSet:
        key = (split_key, config.window_length, config.schema, task, aligned)
        if key not in self._windows:
            self._windows[key] = make_windows(
                self._value(split_key),
                config.window_length,
                self.plan.train.window_stride,
                task,
                config.schema,
                self._value("normalizer"),
                label=split_key,
                target_length=self.target_length if aligned else None,
            )
        return self._windows[key]

    def _path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def _save(self, stage_key: str, result: TrainResult, variant: VariantKind) -> None:
        name = _file_name(stage_key)
        save_model(
            self._path(f"{name}.ckpt"),
            result.params,
            self._value("normalizer"),
            variant,
            seed=self.seed,
            config_hash=self.plan.config_hash,
            stage=stage_key,
        )
        result.write_loss_curve(self._path(f"{name}.loss.csv"))

    # stages

    def simulate(self, kind: ScenarioKind) -> TraceDataset:
        config = self.plan.scenario_config(kind, self.seed)
        dataset = run_simulation(config)
        write_trace_artifact(dataset, self._path(f"{kind.value.lower()}.csv"))
        self.datasets[kind.value] = {
            "packet_count": dataset.packet_count(),
            "n_runs": config.n_runs,
            "config_hash": dataset.meta.extra.get("config_hash"),
        }
        return dataset

    def split(self, kind: ScenarioKind, fraction: Optional[float]) -> Tuple[TraceDataset, TraceDataset]:
        dataset = self._value(f"simulate/{kind.value}")
        return make_split(dataset, self.plan.test_fraction, fraction, self.seed)

    def fit_normalizer(self) -> Normalizer:
        return fit_normalizer(self._value("train/PRETRAIN"), self.base.window_length)

    def pretrain_variant(self, stage_key: str, variant: VariantKind) -> NTTParams:
        config = variant_config(variant, self.seed, self.base)
        windows = self._windows_for("train/PRETRAIN", config, Task.DELAY)
        result = pretrain(variant, windows, self.plan.pretrain_config(self.seed), base=self.base)
        self._save(stage_key, result, variant)
        return result.params

    def finetune_model(
        self,
        stage_key: str,
        start_key: Optional[str],
        variant: VariantKind,
        train_key: str,
        test_key: str,
        task: Task,
        mode: FinetuneMode,
    ) -> NTTParams:
        if start_key is None:
            _, params = build_variant(variant, self.seed, self.base)
        else:
            params = self._value(start_key).copy()
        windows = self._windows_for(train_key, params.config, task)
        audit_leakage(windows, self._windows_for(test_key, params.config, task))
        result = finetune(params, variant, windows, task, self.plan.finetune_config(self.seed, mode))
        self._save(stage_key, result, variant)
        return result.params

    def score(self, params_key: str, variant: VariantKind, test_key: str, task: Task) -> EvalReport:
        params = self._value(params_key)
        windows = self._windows_for(test_key, params.config, task, aligned=True)
        if len(windows) == 0:
            raise EmptyDatasetError(f"no {task.value} windows in {test_key}")
        return evaluate(
            params,
            variant,
            windows,
            task,
            normalizer=self._value("normalizer"),
            seed=self.seed,
            config_hash=self.plan.config_hash,
        )

    def score_baseline(self, name: str, test_key: str, task: Task) -> EvalReport:
        windows = self._windows_for(test_key, self.base, task, aligned=True)
        if len(windows) == 0:
            raise EmptyDatasetError(f"no {task.value} windows in {test_key}")
        return evaluate_predictor(
            PredictorFactory.create(name), windows, seed=self.seed, config_hash=self.plan.config_hash
        )

    # schedule

    def _split_stages(self, kind: ScenarioKind, fraction: Optional[float]) -> None:
        name, suffix = kind.value, _suffix(fraction)
        split_key = f"split/{name}{suffix}"
        self.guard.run(split_key, partial(self.split, kind, fraction), [f"simulate/{name}"])
        self.guard.run(f"train/{name}{suffix}", lambda: self._value(split_key)[0], [split_key])
        self.guard.run(f"test/{name}{suffix}", lambda: self._value(split_key)[1], [split_key])

    def run(self) -> "SeedRun":
        started = time.time()
        for kind in self.plan.scenarios:
            self.guard.run(f"simulate/{kind.value}", partial(self.simulate, kind))

        self._split_stages(ScenarioKind.PRETRAIN, None)
        self.guard.run("normalizer", self.fit_normalizer, ["train/PRETRAIN"])

        for variant in self.plan.variants:
            key = f"pretrain/{variant.value}"
            self.guard.run(key, partial(self.pretrain_variant, key, variant), ["normalizer"])
            score = partial(self.score, key, variant, "test/PRETRAIN", Task.DELAY)
            self._cell(TABLE1, VARIANT_ROWS[variant], PRETRAIN_DELAY, f"score/{key}", score, [key])
        for name, row in BASELINE_ROWS.items():
            score = partial(self.score_baseline, name, "test/PRETRAIN", Task.DELAY)
            key = f"score/{name}/PRETRAIN"
            self._cell(TABLE1, row, PRETRAIN_DELAY, key, score, ["normalizer", "test/PRETRAIN"])

        for kind in (ScenarioKind.CASE1, ScenarioKind.CASE2):
            if kind in self.plan.scenarios:
                self._run_case(kind)

        n_failed = sum(c.status == FAILED for c in self.cells)
        logger.info(
            f"seed {self.seed}: {len(self.cells)} cells, {n_failed} FAILED "
            f"({time.time() - started:.1f}s)"
        )
        return self

    def _run_case(self, kind: ScenarioKind) -> None:
        fractions: List[Optional[float]] = [None]
        if self.plan.subsample < 1:
            fractions.append(self.plan.subsample)
        for fraction in fractions:
            self._split_stages(kind, fraction)
        test_key = f"test/{kind.value}"

        for task in self.plan.tasks:
            for fraction in fractions:
                self._pretrained_cells(kind, task, fraction, test_key)
                self._scratch_cells(kind, task, fraction, test_key)
            if kind is ScenarioKind.CASE1:
                column = LOG_MCT if task is Task.MCT else FINETUNE_DELAY
                for name, row in BASELINE_ROWS.items():
                    score = partial(self.score_baseline, name, test_key, task)
                    key = f"score/{name}/{kind.value}/{task.value}"
                    self._cell(TABLE1, row, column, key, score, ["normalizer", test_key])

    def _pretrained_cells(
        self, kind: ScenarioKind, task: Task, fraction: Optional[float], test_key: str
    ) -> None:
        """DECODER_ONLY fine-tuning of pre-trained models (every variant on full CASE1 data)."""
        train_key = f"train/{kind.value}{_suffix(fraction)}"
        table1 = kind is ScenarioKind.CASE1 and fraction is None
        variants = self.plan.variants if table1 else [VariantKind.FULL]
        comparison = TABLE2 if kind is ScenarioKind.CASE1 else TABLE3
        for variant in variants:
            start_key = f"pretrain/{variant.value}"
            key = f"finetune/{kind.value}{_suffix(fraction)}/{variant.value}/{task.value}"
            stage = partial(
                self.finetune_model,
                key,
                start_key,
                variant,
                train_key,
                test_key,
                task,
                FinetuneMode.DECODER_ONLY,
            )
            self.guard.run(key, stage, [start_key, train_key, test_key])
            score = partial(self.score, key, variant, test_key, task)
            if table1:
                column = LOG_MCT if task is Task.MCT else FINETUNE_DELAY
                self._cell(TABLE1, VARIANT_ROWS[variant], column, f"score/{key}", score, [key])
            if variant is VariantKind.FULL:
                self._cell(
                    comparison,
                    comparison_row(PRETRAINED, fraction),
                    LOG_MCT if task is Task.MCT else DELAY,
                    f"score/{key}",
                    score,
                    [key],
                    LAYERS_TRAINED[FinetuneMode.DECODER_ONLY],
                )

    def _scratch_cells(
        self, kind: ScenarioKind, task: Task, fraction: Optional[float], test_key: str
    ) -> None:
        """FULL training of a freshly initialised model on the same data."""
        train_key = f"train/{kind.value}{_suffix(fraction)}"
        key = f"scratch/{kind.value}{_suffix(fraction)}/{task.value}"
        stage = partial(
            self.finetune_model, key, None, VariantKind.FULL, train_key, test_key, task, FinetuneMode.FULL
        )
        self.guard.run(key, stage, ["normalizer", train_key, test_key])
        score = partial(self.score, key, VariantKind.FULL, test_key, task)
        if kind is ScenarioKind.CASE1 and fraction is None:
            column = LOG_MCT if task is Task.MCT else FINETUNE_DELAY
            self._cell(TABLE1, FROM_SCRATCH, column, f"score/{key}", score, [key])
        self._cell(
            TABLE2 if kind is ScenarioKind.CASE1 else TABLE3,
            comparison_row(FROM_SCRATCH, fraction),
            LOG_MCT if task is Task.MCT else DELAY,
            f"score/{key}",
            score,
            [key],
            LAYERS_TRAINED[FinetuneMode.FULL],
        )


def _seed_job(payload: Tuple[Dict[str, Any], int]) -> Dict[str, Any]:
    """Picklable entry point: one seed of the plan."""
    plan_doc, seed = payload
    run = SeedRun(ExperimentPlan.from_config(plan_doc), seed).run()
    return {"cells": [c.to_dict() for c in run.cells], "datasets": run.datasets}


@dataclass
class MatrixResult:
    plan: ExperimentPlan
    cells: List[MatrixCell]
    datasets: Dict[int, Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "plan": self.plan.to_dict(),
            "config_hash": self.plan.config_hash,
            "datasets": {str(seed): info for seed, info in self.datasets.items()},
            "cells": [c.to_dict() for c in self.cells],
        }

    def failed(self) -> List[MatrixCell]:
        return [c for c in self.cells if c.status == FAILED]


CELL_FIELDS = list(MatrixCell.__dataclass_fields__)


def cells_csv(cells: List[MatrixCell]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CELL_FIELDS, lineterminator="\n")
    writer.writeheader()
    for cell in cells:
        row = cell.to_dict()
        row["mse"] = "" if cell.mse is None else repr(cell.mse)
        writer.writerow(row)
    return buffer.getvalue()


def run_experiment_matrix(plan: ExperimentPlan) -> MatrixResult:
    """Run every seed of `plan` and write matrix.json + matrix.csv under plan.output_dir."""
    started = time.time()
    doc = plan.to_dict()
    jobs = [(doc, seed) for seed in plan.seeds]
    logger.info(
        f"matrix {plan.short_hash}: {len(plan.seeds)} seed(s), {len(plan.variants)} variant(s), "
        f"scale {plan.scale.value}, output {plan.output_dir}"
    )
    outputs = RunPool(max_workers=plan.workers).map_ordered(_seed_job, jobs)

    cells: List[MatrixCell] = []
    datasets: Dict[int, Dict[str, Any]] = {}
    for seed, output in zip(plan.seeds, outputs):
        cells.extend(MatrixCell(**c) for c in output["cells"])
        datasets[seed] = output["datasets"]
    result = MatrixResult(plan=plan, cells=cells, datasets=datasets)

    atomic_write_json(os.path.join(plan.output_dir, "matrix.json"), result.to_dict())
    atomic_write_text(os.path.join(plan.output_dir, "matrix.csv"), cells_csv(cells))
    failed = result.failed()
    if failed:
        first = failed[0]
        logger.warning(f"{len(failed)}/{len(cells)} matrix cells FAILED; first: {first.stage}: {first.cause}")
    logger.info(f"matrix done: {len(cells)} cells in {time.time() - started:.1f}s")
    return result
