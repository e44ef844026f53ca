"""
Command-line harness.

- commands: simulate / train / evaluate / gradcheck implementations
- plan: ExperimentPlan built from a validated plan document
- matrix: the full experiment matrix over seeds
- report: table CSVs, Markdown summary and ordering checks
- stage_guard: marks failed stages and short-circuits their dependents
- artifacts: trace files with provenance sidecars
"""

from .commands import cmd_evaluate, cmd_gradcheck, cmd_simulate, cmd_train
from .matrix import MatrixCell, MatrixResult, run_experiment_matrix
from .plan import ExperimentPlan, load_plan
from .report import ordering_checks, write_report
from .stage_guard import StageGuard, StageOutcome

__all__ = [
    "ExperimentPlan",
    "MatrixCell",
    "MatrixResult",
    "StageGuard",
    "StageOutcome",
    "cmd_evaluate",
    "cmd_gradcheck",
    "cmd_simulate",
    "cmd_train",
    "load_plan",
    "ordering_checks",
    "run_experiment_matrix",
    "write_report",
]
