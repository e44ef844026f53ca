"""
Unit tests for predictors, naive baselines and test-set scoring.
"""

import json

import numpy as np
import pytest

from nttlab.core.errors import ConfigError, EmptyDatasetError, UsageError
from nttlab.core.tasks import EvalTask, Task
from nttlab.model.baselines import EWMA_ALPHA, BaselineKind, baseline_predict, ewma, ewma_rows
from nttlab.model.config import NTTConfig
from nttlab.model.params import NTTParams
from nttlab.model.variants import VariantKind
from nttlab.predictors import EwmaPredictor, LastObservedPredictor, OraclePredictor, PredictorFactory
from nttlab.predictors.base import BaselinePredictor, Predictor
from nttlab.training.evaluate import (
    EvalReport,
    evaluate,
    evaluate_baselines,
    evaluate_predictor,
    read_reports,
)
from nttlab.training.normalizer import fit_normalizer
from nttlab.training.windows import make_windows
from tests.factories import build_synthetic_trace


def _brute_force_ewma(values, alpha):
    s = values[0]
    for x in values[1:]:
        s = alpha * x + (1 - alpha) * s
    return s


class TestBaselines:
    def test_last_observed(self):
        assert baseline_predict(BaselineKind.LAST_OBSERVED, [0.1, 0.2, 0.7]) == 0.7

    def test_ewma_matches_recurrence(self):
        values = list(np.random.default_rng(0).uniform(0.01, 0.05, size=50))
        assert ewma(values) == _brute_force_ewma(values, 0.01)
        assert baseline_predict(BaselineKind.EWMA, values, alpha=0.5) == _brute_force_ewma(values, 0.5)

    def test_ewma_starts_at_first_value(self):
        assert ewma([3.0]) == 3.0
        assert ewma([1.0, 2.0], alpha=0.25) == pytest.approx(1.25)

    def test_rows_match_scalar(self):
        rows = np.random.default_rng(1).uniform(size=(4, 20))
        expected = [ewma(r) for r in rows]
        np.testing.assert_allclose(ewma_rows(rows), expected, rtol=0, atol=1e-15)

    def test_empty_history(self):
        with pytest.raises(ValueError):
            baseline_predict(BaselineKind.EWMA, [])

    def test_default_alpha(self):
        assert EWMA_ALPHA == 0.01


class TestPredictorFactory:
    def test_registered_names(self):
        assert set(PredictorFactory.list_predictors()) >= {"NTT", "LAST_OBSERVED", "EWMA", "ORACLE"}
        assert PredictorFactory.baseline_names() == ["LAST_OBSERVED", "EWMA"]

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="Unknown predictor"):
            PredictorFactory.create("ARIMA")

    def test_ntt_needs_params(self):
        with pytest.raises(UsageError):
            PredictorFactory.create("NTT", {})

    def test_register_and_unregister(self):
        class ConstantPredictor(Predictor):
            def predict(self, batch):
                return np.full(len(batch), 0.5)

            def get_name(self):
                return "CONSTANT"

        PredictorFactory.register("CONSTANT", ConstantPredictor)
        try:
            assert PredictorFactory.is_registered("CONSTANT")
            assert isinstance(PredictorFactory.create("CONSTANT"), ConstantPredictor)
        finally:
            assert PredictorFactory.unregister("CONSTANT")
        assert not PredictorFactory.unregister("CONSTANT")

    def test_baseline_names_follow_class_not_construction(self):
        class BrokenBaseline(BaselinePredictor):
            def __init__(self, config=None):
                raise RuntimeError("constructor must not run")

            def predict(self, batch):
                return np.zeros(len(batch))

            def get_name(self):
                return "BROKEN"

        class UnlearnedNonBaseline(Predictor):
            def predict(self, batch):
                return np.zeros(len(batch))

            def get_name(self):
                return "UNLEARNED"

        PredictorFactory.register("BROKEN", BrokenBaseline)
        PredictorFactory.register("UNLEARNED", UnlearnedNonBaseline)
        try:
            assert PredictorFactory.baseline_names() == ["LAST_OBSERVED", "EWMA", "BROKEN"]
            with pytest.raises(RuntimeError, match="constructor must not run"):
                PredictorFactory.create("BROKEN")
        finally:
            PredictorFactory.unregister("BROKEN")
            PredictorFactory.unregister("UNLEARNED")
        assert PredictorFactory.baseline_names() == ["LAST_OBSERVED", "EWMA"]

    def test_ewma_alpha_from_config(self):
        assert EwmaPredictor({"alpha": 0.2}).alpha == 0.2
        assert not LastObservedPredictor().is_learned


class TestEvaluation:
    """Scoring on DELAY and MCT windows of a synthetic trace."""

    def setup_method(self):
        dataset = build_synthetic_trace(n_runs=2, n_packets=96)
        self.normalizer = fit_normalizer(dataset, 32)
        self.config = NTTConfig.tiny()
        self.delay = make_windows(dataset, 32, 8, Task.DELAY, self.config.schema, self.normalizer, label="t")
        self.mct = make_windows(dataset, 32, 8, Task.MCT, self.config.schema, self.normalizer)

    def test_oracle_scores_zero(self):
        report = evaluate_predictor(OraclePredictor(), self.delay)
        assert report.mse == 0.0
        assert report.n_examples == len(self.delay)
        assert report.task is EvalTask.DELAY
        assert report.dataset == "t"

    def test_last_observed_by_hand(self):
        batch = self.delay.batch(np.arange(len(self.delay)))
        expected = np.mean((batch.history_matrix[:, -1] - batch.targets) ** 2)
        report = evaluate_predictor(LastObservedPredictor(), self.delay, batch_size=5)
        assert report.mse == pytest.approx(expected, rel=1e-12)

    def test_baselines_on_mct(self):
        reports = evaluate_baselines(self.mct, seed=4)
        assert [r.model for r in reports] == ["LAST_OBSERVED", "EWMA"]
        assert all(r.task is EvalTask.LOG_MCT and r.seed == 4 for r in reports)

    def test_model_predictions_are_denormalised(self):
        params = NTTParams.initialize(self.config, 0)
        report = evaluate(params, VariantKind.FULL, self.delay, Task.DELAY)
        assert report.model == "FULL"
        assert np.isfinite(report.mse)

    def test_task_mismatch(self):
        params = NTTParams.initialize(self.config, 0)
        with pytest.raises(ValueError):
            evaluate(params, VariantKind.FULL, self.delay, Task.MCT)

    def test_no_windows(self):
        empty = self.delay.subset([])
        with pytest.raises(EmptyDatasetError):
            evaluate_predictor(OraclePredictor(), empty)


class TestEvalReport:
    def test_json_line_round_trip(self):
        report = EvalReport(EvalTask.LOG_MCT, 0.25, 10, "FULL", "case1.csv", seed=1, config_hash="ab")
        line = report.to_json_line()
        assert json.loads(line)["log_base"] == "e"
        assert read_reports(line + "\n\n") == [report]

    def test_negative_mse_rejected(self):
        with pytest.raises(ValueError):
            EvalReport(EvalTask.DELAY, -1.0, 1, "m", "d")

    def test_schema_rejects_missing_fields(self):
        with pytest.raises(ConfigError, match="eval_report"):
            EvalReport.from_dict({"task": "DELAY", "mse": 0.1})
