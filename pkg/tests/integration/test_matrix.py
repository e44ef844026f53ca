"""
Experiment matrix on a shrunken plan: one seed, two variants, DELAY only.
"""

import csv
import json

import pytest

from nttlab.harness.matrix import (
    FINETUNE_DELAY,
    FROM_SCRATCH,
    OK,
    PRETRAIN_DELAY,
    PRETRAINED,
    TABLE1,
    TABLE2,
    run_experiment_matrix,
)
from nttlab.harness.plan import ExperimentPlan
from nttlab.harness.report import NOT_EVALUATED, write_report
from nttlab.main import EXIT_OK, main

pytestmark = [pytest.mark.integration, pytest.mark.slow]


def tiny_matrix_plan(output_dir):
    return ExperimentPlan.from_config(
        {
            "scale": "DESK",
            "seeds": [1],
            "scenarios": ["PRETRAIN", "CASE1"],
            "variants": ["FULL", "NO_DELAY"],
            "tasks": ["DELAY"],
            "subsample": 0.5,
            "output_dir": str(output_dir),
            "model": {"scheme": "TINY"},
            "simulation": {"duration": 2.0, "n_runs": 3},
            "train": {"batch_size": 32, "window_stride": 8, "pretrain_epochs": 1, "finetune_epochs": 1},
        }
    )


@pytest.fixture(scope="module")
def matrix_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("matrix")
    return out, run_experiment_matrix(tiny_matrix_plan(out))


@pytest.mark.timeout(600)
class TestExperimentMatrix:
    def test_every_cell_scored(self, matrix_run):
        _, result = matrix_run
        assert result.failed() == []
        assert all(c.status == OK and c.mse is not None and c.mse >= 0 for c in result.cells)

    def test_cells_cover_tables(self, matrix_run):
        _, result = matrix_run
        table1 = {(c.row, c.column) for c in result.cells if c.table == TABLE1}
        assert (PRETRAINED, PRETRAIN_DELAY) in table1
        assert (PRETRAINED, FINETUNE_DELAY) in table1
        assert (FROM_SCRATCH, FINETUNE_DELAY) in table1
        table2 = {c.row for c in result.cells if c.table == TABLE2}
        assert table2 == {
            "Pre-trained (full)",
            "Pre-trained (50%)",
            "From scratch (full)",
            "From scratch (50%)",
        }

    def test_artifacts_written(self, matrix_run):
        out, result = matrix_run
        doc = json.loads((out / "matrix.json").read_text())
        assert doc["config_hash"] == result.plan.config_hash
        assert len(doc["cells"]) == len(result.cells)
        with open(out / "matrix.csv", newline="") as f:
            assert len(list(csv.DictReader(f))) == len(result.cells)
        assert list((out / "seed-1").glob("*.ckpt"))

    def test_report_renders(self, matrix_run):
        out, _ = matrix_run
        paths = write_report(str(out / "matrix.json"))
        with open(paths["checks"], newline="") as f:
            checks = {row["check"]: row for row in csv.DictReader(f)}
        assert checks["mct_beats_baselines"]["status"] == NOT_EVALUATED

    def test_cli_report(self, matrix_run):
        out, _ = matrix_run
        argv = ["report", "--matrix", str(out / "matrix.json"), "--out-dir", str(out / "rep")]
        assert main(argv) == EXIT_OK
        assert (out / "rep").is_dir()
