"""
Command implementations behind the CLI subcommands.

Each command takes plain arguments, writes its artifacts atomically and
returns a result object; `nttlab.main` only parses flags and prints.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional

from ..core.errors import CheckpointError, DataError, UsageError
from ..core.tasks import Task
from ..core.trace import make_split
from ..model.config import NTTConfig
from ..model.network import forward_delay, forward_mct
from ..model.params import NTTParams, attach_mct_head
from ..model.variants import VariantKind, variant_config
from ..netsim.engine import run_simulation
from ..netsim.scenarios import build_scenario
from ..netsim.specs import ScenarioKind, Scale
from ..netsim.stats import TraceStats, trace_stats
from ..numerics.gradcheck import GradcheckReport, finite_diff_gradcheck
from ..numerics.ops import add, mse_loss
from ..predictors.factory import PredictorFactory
from ..training.evaluate import EvalReport, evaluate_baselines, evaluate_predictor
from ..training.model_io import TrainedModel, load_model, save_model
from ..training.normalizer import fit_normalizer
from ..training.trainer import FinetuneMode, TrainConfig, TrainResult, finetune, pretrain
from ..training.windows import audit_leakage, make_windows
from ..utils.fsio import atomic_write_text
from ..utils.integrity import config_hash, file_digest
from ..utils.seeding import GRADCHECK, substream
from .artifacts import read_trace_artifact, write_trace_artifact

logger = logging.getLogger(__name__)

PRETRAIN = "pretrain"
FINETUNE = "finetune"
TRAIN_MODES = (PRETRAIN, FINETUNE)


def cmd_simulate(
    scenario: ScenarioKind,
    scale: Scale,
    seed: int,
    out: str,
    workers: int = 1,
    duration: Optional[float] = None,
    n_runs: Optional[int] = None,
) -> TraceStats:
    """Simulate a scenario, write the trace (+ sidecar) and return its statistics."""
    config = build_scenario(scenario, scale, seed)
    if duration is not None or n_runs is not None:
        config = config.with_overrides(duration=duration, n_runs=n_runs)
    dataset = run_simulation(config, workers=workers)
    write_trace_artifact(dataset, out)
    return trace_stats(dataset)


@dataclass
class TrainOutcome:
    checkpoint: str
    loss_curve: str
    result: TrainResult
    config_hash: str


def _init_model(init: str, variant: VariantKind, seed: int) -> TrainedModel:
    """Load `init` into the architecture of `variant` (CheckpointError names mismatched shapes)."""
    stored = load_model(init)
    if stored.variant is variant:
        return stored
    target = variant_config(variant, seed, base=stored.params.config)
    loaded = load_model(init, config=target)
    loaded.variant = variant
    return loaded


def cmd_train(
    mode: str,
    variant: VariantKind,
    task: Task,
    data: str,
    out: str,
    cfg: TrainConfig,
    init: Optional[str] = None,
    base: Optional[NTTConfig] = None,
    test_fraction: float = 0.1,
    subsample: Optional[float] = None,
) -> TrainOutcome:
    """read -> split -> normalise -> windows -> train -> checkpoint (+ loss CSV).

    Pre-training fits the normaliser on the train split; fine-tuning reuses
    the frozen normaliser of `init` (or fits one when training from scratch).

    Raises:
        UsageError: bad mode/task combination, or DECODER_ONLY without `init`.
        CheckpointError: `init` does not fit `variant`.
    """
    if mode not in TRAIN_MODES:
        raise UsageError(f"unknown train mode {mode!r}; expected one of {TRAIN_MODES}")
    if mode == PRETRAIN and task is not Task.DELAY:
        raise UsageError("pre-training is masked-delay prediction; use --task DELAY")
    if mode == FINETUNE and init is None and cfg.finetune_mode is FinetuneMode.DECODER_ONLY:
        raise UsageError("DECODER_ONLY fine-tuning needs --init: there is no pre-trained body to freeze")
    if init is not None and not os.path.exists(init):
        raise CheckpointError(f"init checkpoint not found: {init}")

    dataset = read_trace_artifact(data)
    train_set, _ = make_split(dataset, test_fraction, subsample, cfg.seed)

    if init is not None:
        model = _init_model(init, variant, cfg.seed)
        params, normalizer = model.params, model.normalizer
    else:
        config = variant_config(variant, cfg.seed, base)
        params = NTTParams.initialize(config, cfg.seed)
        full_length = variant_config(VariantKind.FULL, cfg.seed, base).window_length
        normalizer = fit_normalizer(train_set, full_length)

    windows = make_windows(
        train_set,
        params.config.window_length,
        cfg.window_stride,
        task,
        params.config.schema,
        normalizer,
        label="train",
    )
    if mode == PRETRAIN:
        result = pretrain(variant, windows, cfg, params=params)
    else:
        result = finetune(params, variant, windows, task, cfg)

    provenance = {
        "stage": mode,
        "variant": variant.value,
        "task": task.value,
        "train": cfg.to_dict(),
        "ntt_config": params.config.to_dict(),
        "data_digest": file_digest(data),
        "init_digest": file_digest(init) if init else None,
        "test_fraction": test_fraction,
        "subsample": subsample,
    }
    digest = config_hash(provenance)
    save_model(
        out,
        result.params,
        normalizer,
        variant,
        seed=cfg.seed,
        config_hash=digest,
        stage=mode,
        task=task.value,
        train=cfg.to_dict(),
        test_fraction=test_fraction,
        data_digest=provenance["data_digest"],
    )
    curve_path = out + ".loss.csv"
    result.write_loss_curve(curve_path)
    return TrainOutcome(checkpoint=out, loss_curve=curve_path, result=result, config_hash=digest)


def cmd_evaluate(
    checkpoint: str,
    task: Task,
    data: str,
    variant: Optional[VariantKind] = None,
    with_baselines: bool = False,
    out: Optional[str] = None,
    predictor: str = "NTT",
    test_fraction: Optional[float] = None,
    seed: Optional[int] = None,
    train_data: Optional[str] = None,
) -> List[EvalReport]:
    """Score a checkpoint (and optionally the baselines) on the test runs of `data`.

    The split seed and test fraction default to the ones stored in the
    checkpoint, so the test runs are the ones its training never saw. When
    `train_data` is the trace the checkpoint was trained on, the run-level
    leakage audit is applied as well.

    Raises:
        DataError: missing files, or no test windows.
        UsageError: MCT evaluation of a model without an MCT head.
    """
    for path in (checkpoint, data):
        if not os.path.exists(path):
            raise DataError(f"file not found: {path}")
    model = _init_model(checkpoint, variant, 0) if variant is not None else load_model(checkpoint)
    meta = model.meta
    seed = int(meta.get("seed", 0)) if seed is None else seed
    test_fraction = float(meta.get("test_fraction", 0.1)) if test_fraction is None else test_fraction
    stride = int(meta.get("train", {}).get("window_stride", 16))
    if task is Task.MCT and predictor == "NTT" and not model.params.has_mct_head:
        raise UsageError("checkpoint has no MCT head; fine-tune it for MCT first")

    dataset = read_trace_artifact(data)
    _, test_set = make_split(dataset, test_fraction, None, seed)
    config = model.params.config
    windows = make_windows(
        test_set,
        config.window_length,
        stride,
        task,
        config.schema,
        model.normalizer,
        label=os.path.basename(data),
    )
    if train_data is not None:
        train_set, _ = make_split(read_trace_artifact(train_data), test_fraction, None, seed)
        train_windows = make_windows(
            train_set, config.window_length, stride, task, config.schema, model.normalizer
        )
        audit_leakage(train_windows, windows)

    report_kwargs = {"seed": seed, "config_hash": meta.get("config_hash")}
    scorer = PredictorFactory.create(
        predictor,
        {"params": model.params, "normalizer": model.normalizer, "label": model.variant.value},
    )
    reports = [evaluate_predictor(scorer, windows, **report_kwargs)]
    if with_baselines:
        reports += evaluate_baselines(windows, **report_kwargs)
    if out:
        atomic_write_text(out, "".join(r.to_json_line() + "\n" for r in reports))
    return reports


def cmd_gradcheck(
    seed: int = 0,
    tolerance: float = 1e-4,
    max_coords: int = 64,
    batch: int = 2,
) -> GradcheckReport:
    """Full tiny-NTT gradient check: both heads, every parameter."""
    config = NTTConfig.tiny(seed=seed)
    params = NTTParams.initialize(config, seed)
    attach_mct_head(params, seed)
    rng = substream(seed, GRADCHECK, 1)
    features = rng.standard_normal((batch, config.window_length, config.schema.width))
    delay_target = rng.standard_normal(batch)
    mct_target = rng.standard_normal(batch)
    log_size_z = rng.standard_normal(batch)

    def forward():
        delay_loss = mse_loss(forward_delay(features, params), delay_target)
        mct_loss = mse_loss(forward_mct(features, log_size_z, params), mct_target)
        return add(delay_loss, mct_loss)

    report = finite_diff_gradcheck(
        forward, list(params.store), tolerance=tolerance, max_coords=max_coords, seed=seed
    )
    level = logging.INFO if report.passed else logging.ERROR
    logger.log(
        level,
        f"gradcheck {'passed' if report.passed else 'FAILED'}: max rel error {report.max_rel_error:.3e} "
        f"({report.n_checked} checked, {report.n_skipped} kinks skipped)",
    )
    return report

