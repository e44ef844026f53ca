"""
Smoke tests for nttlab installation verification.

These tests verify that the basic components are working after a fresh install.
Should be run as part of CI to catch breaking changes.
"""

import importlib
import json
import os

import pytest

MODULES = [
    "nttlab.core.errors",
    "nttlab.core.run_pool",
    "nttlab.core.tasks",
    "nttlab.core.trace",
    "nttlab.netsim.engine",
    "nttlab.netsim.scenarios",
    "nttlab.netsim.tcp",
    "nttlab.numerics.tensor",
    "nttlab.numerics.layers",
    "nttlab.numerics.optim",
    "nttlab.numerics.gradcheck",
    "nttlab.model.network",
    "nttlab.model.variants",
    "nttlab.predictors.factory",
    "nttlab.training.trainer",
    "nttlab.training.evaluate",
    "nttlab.harness.matrix",
    "nttlab.harness.report",
    "nttlab.main",
]

SCHEMA_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "nttlab", "json_schema")


class TestModuleImports:
    @pytest.mark.parametrize("module_name", MODULES)
    def test_module_importable(self, module_name):
        module = importlib.import_module(module_name)
        assert module is not None, f"Module {module_name} imported as None"


class TestConfigurationLoading:
    @pytest.mark.parametrize("name", ["plan", "sim_config", "eval_report"])
    def test_schema_is_valid_json(self, name):
        with open(os.path.join(SCHEMA_DIR, f"{name}.schema.json")) as f:
            schema = json.load(f)
        assert "$schema" in schema or "type" in schema

    def test_default_config_validates(self):
        from nttlab.utils.config import default_config, validate_config

        validate_config(default_config())


class TestBasicFunctionality:
    def test_baseline_predictors_registered(self):
        from nttlab.predictors.factory import PredictorFactory

        assert {"LAST_OBSERVED", "EWMA", "ORACLE", "NTT"} <= set(PredictorFactory.list_predictors())

    def test_help_exits_cleanly(self, capsys):
        from nttlab.main import main

        with pytest.raises(SystemExit) as info:
            main(["--help"])
        assert info.value.code == 0
        assert "simulate" in capsys.readouterr().out


class TestDependencyAvailability:
    @pytest.mark.parametrize("package", ["numpy", "scipy", "jsonschema"])
    def test_required_packages_available(self, package):
        importlib.import_module(package)
