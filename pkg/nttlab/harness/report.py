"""
Matrix reports.

Turns a matrix.json into three CSV tables (seed-averaged MSE per cell) and a
Markdown summary with the ordering checks, each PASS/FAIL by majority of
seeds: a check passes when it holds for at least two thirds of the seeds
where it could be evaluated.
"""

import csv
import io
import logging
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import DataError
from ..utils.fsio import atomic_write_text, read_json
from .matrix import (
    COMPARISON_COLUMNS,
    DELAY,
    EWMA,
    FAILED,
    FINETUNE_DELAY,
    FROM_SCRATCH,
    LAST_OBSERVED,
    LOG_MCT,
    OK,
    PRETRAIN_DELAY,
    PRETRAINED,
    TABLE1,
    TABLE1_COLUMNS,
    TABLE1_ROWS,
    TABLE2,
    TABLE3,
    comparison_row,
)

logger = logging.getLogger(__name__)

# PRETRAIN packet-count bands (inclusive). PAPER: 1.2M +- 15%. DESK: at least 50k and at
# most twice what the DESK bottleneck carries in full-size packets (5 Mbps x 30 s x 6 runs).
PACKET_BANDS = {
    "PAPER": (1_020_000, 1_380_000),
    "DESK": (50_000, 150_000),
}
NO_DELAY_FACTOR = 10.0
CASE2_SCRATCH_RATIO = 5.0

PASS = "PASS"
FAIL = "FAIL"
NOT_EVALUATED = "N/A"


class CellIndex:
    """Per-seed lookup of OK cells plus seed-averaged table values."""

    def __init__(self, matrix: Dict[str, Any]):
        self.matrix = matrix
        self.seeds: List[int] = [int(s) for s in matrix["plan"]["seeds"]]
        self._cells: Dict[tuple, Dict[str, Any]] = {}
        for cell in matrix["cells"]:
            self._cells[(cell["seed"], cell["table"], cell["row"], cell["column"])] = cell

    def mse(self, seed: int, table: str, row: str, column: str) -> Optional[float]:
        cell = self._cells.get((seed, table, row, column))
        if cell is None or cell["status"] != OK:
            return None
        return float(cell["mse"])

    def cell_text(self, table: str, row: str, column: str) -> str:
        """Mean over seeds with an OK cell; FAILED when every present cell failed."""
        values, failed = [], 0
        for seed in self.seeds:
            cell = self._cells.get((seed, table, row, column))
            if cell is None:
                continue
            if cell["status"] == OK:
                values.append(float(cell["mse"]))
            else:
                failed += 1
        if values:
            return repr(float(np.mean(values)))
        return FAILED if failed else ""

    def layers_trained(self, table: str, row: str) -> str:
        for key, cell in self._cells.items():
            if key[1] == table and key[2] == row and cell.get("layers_trained"):
                return cell["layers_trained"]
        return ""


@dataclass
class CheckResult:
    name: str
    description: str
    passed: int
    evaluated: int

    @property
    def status(self) -> str:
        if self.evaluated == 0:
            return NOT_EVALUATED
        return PASS if 3 * self.passed >= 2 * self.evaluated else FAIL


def _all_known(*values: Optional[float]) -> bool:
    return all(v is not None for v in values)


def _check(
    index: CellIndex, name: str, description: str, predicate: Callable[[int], Optional[bool]]
) -> CheckResult:
    passed = evaluated = 0
    for seed in index.seeds:
        outcome = predicate(seed)
        if outcome is None:
            continue
        evaluated += 1
        passed += bool(outcome)
    return CheckResult(name, description, passed, evaluated)


def ordering_checks(matrix: Dict[str, Any]) -> List[CheckResult]:
    index = CellIndex(matrix)
    plan = matrix["plan"]
    subsample = plan.get("subsample", 0.1)

    def finetune_beats_baselines(seed):
        m = index.mse(seed, TABLE1, PRETRAINED, FINETUNE_DELAY)
        last = index.mse(seed, TABLE1, LAST_OBSERVED, FINETUNE_DELAY)
        ewma = index.mse(seed, TABLE1, EWMA, FINETUNE_DELAY)
        return m < last and m < ewma if _all_known(m, last, ewma) else None

    def pretrained_beats_scratch_small(seed):
        pairs = []
        for column in COMPARISON_COLUMNS:
            pre = index.mse(seed, TABLE2, comparison_row(PRETRAINED, subsample), column)
            scratch = index.mse(seed, TABLE2, comparison_row(FROM_SCRATCH, subsample), column)
            if _all_known(pre, scratch):
                pairs.append(pre < scratch)
        return all(pairs) if pairs else None

    def no_delay_ablation(seed):
        full = index.mse(seed, TABLE1, PRETRAINED, PRETRAIN_DELAY)
        no_delay = index.mse(seed, TABLE1, "Without delay", PRETRAIN_DELAY)
        return no_delay >= NO_DELAY_FACTOR * full if _all_known(full, no_delay) else None

    def mct_beats_baselines(seed):
        m = index.mse(seed, TABLE1, PRETRAINED, LOG_MCT)
        last = index.mse(seed, TABLE1, LAST_OBSERVED, LOG_MCT)
        ewma = index.mse(seed, TABLE1, EWMA, LOG_MCT)
        return m < last and m < ewma if _all_known(m, last, ewma) else None

    def case2_scratch_fails(seed):
        pre = index.mse(seed, TABLE3, comparison_row(PRETRAINED, None), DELAY)
        scratch = index.mse(seed, TABLE3, comparison_row(FROM_SCRATCH, None), DELAY)
        if not _all_known(pre, scratch):
            return None
        return pre < scratch and scratch > CASE2_SCRATCH_RATIO * pre

    def dataset_shape(seed):
        info = matrix.get("datasets", {}).get(str(seed), {}).get("PRETRAIN")
        if info is None:
            return None
        low, high = PACKET_BANDS[plan.get("scale", "DESK")]
        return low <= info["packet_count"] <= high

    return [
        _check(
            index,
            "finetune_beats_baselines",
            "CASE1 fine-tuned delay MSE below last observed and EWMA",
            finetune_beats_baselines,
        ),
        _check(
            index,
            "pretrained_beats_scratch_small",
            "subsampled CASE1: pre-trained (decoder only) below from scratch (full), every task",
            pretrained_beats_scratch_small,
        ),
        _check(
            index,
            "no_delay_ablation",
            f"pre-training delay MSE without delay at least {NO_DELAY_FACTOR:g}x the full model's",
            no_delay_ablation,
        ),
        _check(
            index,
            "mct_beats_baselines",
            "CASE1 log-MCT MSE below last observed and EWMA",
            mct_beats_baselines,
        ),
        _check(
            index,
            "case2_scratch_fails",
            f"CASE2 delay: pre-trained below from scratch by more than {CASE2_SCRATCH_RATIO:g}x",
            case2_scratch_fails,
        ),
        _check(index, "dataset_shape", "PRETRAIN trace size within the expected band", dataset_shape),
    ]


def _csv(header: Sequence[str], rows: List[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def table1_rows(matrix: Dict[str, Any]) -> List[List[str]]:
    index = CellIndex(matrix)
    return [[row] + [index.cell_text(TABLE1, row, c) for c in TABLE1_COLUMNS] for row in TABLE1_ROWS]


def comparison_rows(matrix: Dict[str, Any], table: str) -> List[List[str]]:
    """Four rows: {pre-trained, from scratch} x {full, subsample}."""
    index = CellIndex(matrix)
    subsample = matrix["plan"].get("subsample", 0.1)
    rows = []
    for start in (PRETRAINED, FROM_SCRATCH):
        for fraction in (None, subsample):
            label = comparison_row(start, fraction)
            rows.append(
                [label, index.layers_trained(table, label)]
                + [index.cell_text(table, label, c) for c in COMPARISON_COLUMNS]
            )
    return rows


def _markdown_table(header: Sequence[str], rows: List[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(cell or "-" for cell in row) + " |" for row in rows]
    return "\n".join(lines)


def render_markdown(matrix: Dict[str, Any], checks: List[CheckResult]) -> str:
    plan = matrix["plan"]
    t1_header = ["model"] + [f"{c}_mse" for c in TABLE1_COLUMNS]
    cmp_header = ["model", "layers_trained"] + [f"{c}_mse" for c in COMPARISON_COLUMNS]
    parts = [
        "# Experiment matrix",
        "",
        f"scale {plan['scale']}, seeds {plan['seeds']}, config hash `{matrix.get('config_hash', '')}`.",
        "MSE in seconds^2 for delay and squared natural-log seconds for MCT, averaged over seeds.",
        "",
        "## Models and baselines",
        "",
        _markdown_table(t1_header, table1_rows(matrix)),
        "",
        "## Fine-tuning on CASE1",
        "",
        _markdown_table(cmp_header, comparison_rows(matrix, TABLE2)),
        "",
        "## Fine-tuning on CASE2",
        "",
        _markdown_table(cmp_header, comparison_rows(matrix, TABLE3)),
        "",
        "## Ordering checks",
        "",
        _markdown_table(
            ["check", "status", "seeds passed", "description"],
            [[c.name, c.status, f"{c.passed}/{c.evaluated}", c.description] for c in checks],
        ),
    ]
    failed_cells = [c for c in matrix["cells"] if c["status"] == FAILED]
    if failed_cells:
        parts += ["", "## Failed cells", ""]
        for c in failed_cells:
            parts.append(f"- seed {c['seed']} {c['table']} / {c['row']} / {c['column']}: {c['cause']}")
    return "\n".join(parts) + "\n"


def write_report(matrix_path: str, out_dir: Optional[str] = None) -> Dict[str, str]:
    """Write table1/2/3 CSVs, checks.csv and report.md next to the matrix (or into out_dir).

    Raises:
        DataError: the matrix file is missing or malformed.
    """
    if not os.path.exists(matrix_path):
        raise DataError(f"matrix file not found: {matrix_path}")
    matrix = read_json(matrix_path)
    if not isinstance(matrix, dict) or "cells" not in matrix or "plan" not in matrix:
        raise DataError(f"{matrix_path} is not a matrix result")
    out_dir = out_dir or os.path.dirname(os.path.abspath(matrix_path))

    checks = ordering_checks(matrix)
    cmp_header = ["model", "layers_trained"] + [f"{c}_mse" for c in COMPARISON_COLUMNS]
    outputs = {
        "table1": (["model"] + [f"{c}_mse" for c in TABLE1_COLUMNS], table1_rows(matrix)),
        "table2": (cmp_header, comparison_rows(matrix, TABLE2)),
        "table3": (cmp_header, comparison_rows(matrix, TABLE3)),
        "checks": (
            ["check", "status", "passed", "evaluated", "description"],
            [[c.name, c.status, str(c.passed), str(c.evaluated), c.description] for c in checks],
        ),
    }
    paths = {}
    for name, (header, rows) in outputs.items():
        paths[name] = os.path.join(out_dir, f"{name}.csv")
        atomic_write_text(paths[name], _csv(header, rows))
    paths["markdown"] = os.path.join(out_dir, "report.md")
    atomic_write_text(paths["markdown"], render_markdown(matrix, checks))
    for c in checks:
        logger.info(f"check {c.name}: {c.status} ({c.passed}/{c.evaluated} seeds)")
    return paths
