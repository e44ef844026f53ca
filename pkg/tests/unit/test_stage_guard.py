"""
Unit tests for the stage failure guard.
"""

import pytest

from nttlab.core.errors import EmptyDatasetError
from nttlab.harness.stage_guard import StageGuard, StageState, describe_failure


class TestStageGuard:
    """Failure propagation through dependent stages."""

    def setup_method(self):
        """Fresh guard for each test."""
        self.guard = StageGuard()

    def test_successful_stage_records_value(self):
        outcome = self.guard.run("simulate/PRETRAIN", lambda: 42)
        assert outcome.ok
        assert outcome.value == 42
        assert self.guard.get("simulate/PRETRAIN") is outcome

    def test_failure_is_recorded_with_cause(self):
        def boom():
            raise EmptyDatasetError("no windows")

        outcome = self.guard.run("pretrain/FULL", boom)
        assert outcome.state is StageState.FAILED
        assert outcome.cause == "EmptyDatasetError: no windows"

    def test_dependents_are_skipped(self, mocker):
        """A failed stage short-circuits its dependents without calling them."""
        self.guard.run("simulate/CASE1", mocker.Mock(side_effect=RuntimeError("disk full")))
        downstream = mocker.Mock(return_value="never")

        outcome = self.guard.run("finetune/CASE1", downstream, depends_on=["simulate/CASE1"])

        downstream.assert_not_called()
        assert not outcome.ok
        assert outcome.cause == "upstream failed: simulate/CASE1: RuntimeError: disk full"

    def test_upstream_cause_is_not_nested(self, mocker):
        self.guard.run("a", mocker.Mock(side_effect=ValueError("x")))
        self.guard.run("b", mocker.Mock(), depends_on=["a"])
        outcome = self.guard.run("c", mocker.Mock(), depends_on=["b"])
        assert outcome.cause == "upstream failed: a: ValueError: x"

    def test_missing_dependency_counts_as_failed(self, mocker):
        stage = mocker.Mock()
        outcome = self.guard.run("score", stage, depends_on=["never-scheduled"])
        stage.assert_not_called()
        assert "never ran" in outcome.cause

    def test_unrelated_stages_continue(self, mocker):
        self.guard.run("simulate/CASE1", mocker.Mock(side_effect=RuntimeError("x")))
        outcome = self.guard.run("simulate/CASE2", lambda: "trace")
        assert outcome.ok

    def test_uncaught_exception_types_propagate(self):
        guard = StageGuard(catch=(ValueError,))
        with pytest.raises(KeyError):
            guard.run("k", lambda: {}["missing"])

    def test_stats_and_reset(self, mocker):
        self.guard.run("a", lambda: 1)
        self.guard.run("b", mocker.Mock(side_effect=RuntimeError("x")))
        assert self.guard.get_stats() == {"stages": 2, "done": 1, "failed": 1}
        self.guard.reset()
        assert self.guard.get_stats() == {"stages": 0, "done": 0, "failed": 0}

    def test_describe_failure(self):
        assert describe_failure(KeyError("k")) == "KeyError: 'k'"
