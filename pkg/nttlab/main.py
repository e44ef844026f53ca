"""
nttlab command line.

    nttlab simulate  --scenario PRETRAIN --seed 7 --out pretrain.csv
    nttlab train     --mode pretrain --variant FULL --task DELAY --data pretrain.csv --out full.ckpt
    nttlab train     --mode finetune --variant FULL --task MCT --data case1.csv \
                     --init full.ckpt --out mct.ckpt
    nttlab evaluate  --checkpoint mct.ckpt --task MCT --data case1.csv --with-baselines
    nttlab gradcheck
    nttlab matrix    --plan plan.json
    nttlab report    --matrix runs/matrix.json

Stdout carries command output only (stats lines, JSON); logs go to stderr
and the rotating log file. Exit codes: 0 success, 1 usage error,
2 data/validation error, 3 numeric failure.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .__version__ import __version__
from .core.errors import GraphStateError, NttLabError, ShapeError, UsageError
from .core.tasks import Task
from .harness.commands import TRAIN_MODES, cmd_evaluate, cmd_gradcheck, cmd_simulate, cmd_train
from .harness.matrix import run_experiment_matrix
from .harness.plan import ExperimentPlan, load_plan
from .harness.report import write_report
from .model.variants import VariantKind
from .netsim.specs import ScenarioKind, Scale
from .predictors.factory import PredictorFactory
from .training.trainer import FinetuneMode, TrainConfig
from .utils.integrity import canonical_json
from .utils.logger import set_level, setup_logger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; here that is a usage error (1)."""

    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _enum_names(enum_cls) -> List[str]:
    return [member.value for member in enum_cls]


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="nttlab", description="Network traffic transformer lab")
    parser.add_argument("--version", action="version", version=f"nttlab {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging")
    parser.add_argument(
        "--config", default=None, help="plan JSON (defaults: $NTTLAB_CONFIG, ./nttlab.json, built-ins)"
    )
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser("simulate", help="simulate a scenario and write its trace")
    p.add_argument("--scenario", required=True, choices=_enum_names(ScenarioKind))
    p.add_argument("--scale", choices=_enum_names(Scale), default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--duration", type=float, default=None, help="seconds per run")
    p.add_argument("--n-runs", type=int, default=None)

    p = sub.add_parser("train", help="pre-train or fine-tune a model on a trace")
    p.add_argument("--mode", required=True, choices=list(TRAIN_MODES))
    p.add_argument("--variant", choices=_enum_names(VariantKind), default=VariantKind.FULL.value)
    p.add_argument("--task", choices=_enum_names(Task), default=Task.DELAY.value)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--init", default=None, help="checkpoint to start from")
    p.add_argument(
        "--finetune-mode", choices=_enum_names(FinetuneMode), default=FinetuneMode.DECODER_ONLY.value
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--stride", type=int, default=None, help="window stride in packets")
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--subsample", type=float, default=None, help="keep this share of the train runs")

    p = sub.add_parser("evaluate", help="score a checkpoint on the test runs of a trace")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", choices=_enum_names(Task), default=Task.DELAY.value)
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=_enum_names(VariantKind), default=None)
    p.add_argument("--predictor", choices=PredictorFactory.list_predictors(), default="NTT")
    p.add_argument("--with-baselines", action="store_true")
    p.add_argument("--out", default=None, help="EvalReport JSON-lines file")
    p.add_argument("--seed", type=int, default=None, help="split seed (default: the checkpoint's)")
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--train-data", default=None, help="training trace, enables the leakage audit")

    p = sub.add_parser("gradcheck", help="finite-difference check of the tiny model's gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-coords", type=int, default=64)

    p = sub.add_parser("matrix", help="run the experiment matrix of a plan")
    p.add_argument("--plan", default=None, help="plan JSON (overrides --config)")
    p.add_argument("--scale", choices=_enum_names(Scale), default=None)
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--pretrain-epochs", type=int, default=None)
    p.add_argument("--finetune-epochs", type=int, default=None)
    p.add_argument("--report", action="store_true", help="also render the report")

    p = sub.add_parser("report", help="render tables and ordering checks from matrix.json")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out-dir", default=None)
    return parser


def _run_simulate(args, plan: ExperimentPlan) -> int:
    stats = cmd_simulate(
        ScenarioKind(args.scenario),
        Scale(args.scale) if args.scale else plan.scale,
        args.seed,
        args.out,
        workers=args.workers or plan.workers,
        duration=args.duration,
        n_runs=args.n_runs,
    )
    print(f"{args.out}: {stats.summary_line()}")
    return EXIT_OK


def _run_train(args, plan: ExperimentPlan) -> int:
    default_epochs = plan.train.pretrain_epochs if args.mode == "pretrain" else plan.train.finetune_epochs
    cfg = TrainConfig(
        lr=args.lr if args.lr is not None else plan.train.lr,
        batch_size=args.batch_size if args.batch_size is not None else plan.train.batch_size,
        epochs=args.epochs if args.epochs is not None else default_epochs,
        window_stride=args.stride if args.stride is not None else plan.train.window_stride,
        seed=args.seed,
        finetune_mode=FinetuneMode(args.finetune_mode),
    )
    outcome = cmd_train(
        args.mode,
        VariantKind(args.variant),
        Task(args.task),
        args.data,
        args.out,
        cfg,
        init=args.init,
        base=plan.base_model_config(args.seed),
        test_fraction=args.test_fraction if args.test_fraction is not None else plan.test_fraction,
        subsample=args.subsample,
    )
    final = outcome.result.loss_curve[-1] if outcome.result.loss_curve else float("nan")
    print(
        f"{outcome.checkpoint}: steps={outcome.result.steps} final_loss={final!r} "
        f"config_hash={outcome.config_hash} loss_curve={outcome.loss_curve}"
    )
    return EXIT_OK


def _run_evaluate(args, plan: ExperimentPlan) -> int:
    reports = cmd_evaluate(
        args.checkpoint,
        Task(args.task),
        args.data,
        variant=VariantKind(args.variant) if args.variant else None,
        with_baselines=args.with_baselines,
        out=args.out,
        predictor=args.predictor,
        test_fraction=args.test_fraction,
        seed=args.seed,
        train_data=args.train_data,
    )
    for report in reports:
        print(report.to_json_line())
    return EXIT_OK


def _run_gradcheck(args, plan: ExperimentPlan) -> int:
    report = cmd_gradcheck(seed=args.seed, tolerance=args.tolerance, max_coords=args.max_coords)
    print(canonical_json(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _run_matrix(args, plan: ExperimentPlan) -> int:
    plan = plan.with_overrides(
        scale=args.scale,
        seeds=args.seeds,
        output_dir=args.output_dir,
        workers=args.workers,
        pretrain_epochs=args.pretrain_epochs,
        finetune_epochs=args.finetune_epochs,
    )
    result = run_experiment_matrix(plan)
    failed = len(result.failed())
    print(f"matrix: cells={len(result.cells)} failed={failed} config_hash={plan.config_hash}")
    if args.report:
        paths = write_report(os.path.join(plan.output_dir, "matrix.json"))
        print(json.dumps(paths, sort_keys=True))
    return EXIT_OK


def _run_report(args, plan: ExperimentPlan) -> int:
    paths = write_report(args.matrix, args.out_dir)
    print(json.dumps(paths, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "simulate": _run_simulate,
    "train": _run_train,
    "evaluate": _run_evaluate,
    "gradcheck": _run_gradcheck,
    "matrix": _run_matrix,
    "report": _run_report,
}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(exc, NttLabError):
        return exc.exit_code
    if isinstance(exc, GraphStateError):
        return EXIT_NUMERIC
    if isinstance(exc, (ShapeError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    setup_logger()
    try:
        args = _build_parser().parse_args(argv)
        plan = load_plan(args.config if args.command != "matrix" or not args.plan else args.plan)
        set_level("DEBUG" if args.verbose else plan.log_level)
        return _COMMANDS[args.command](args, plan)
    except (NttLabError, ShapeError, GraphStateError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
