"""
Unit tests for pre-training and fine-tuning on the tiny architecture.
"""

import numpy as np
import pytest

from nttlab.core.errors import ConfigError, TrainingDivergedError, UsageError
from nttlab.core.tasks import Task
from nttlab.model.config import NTTConfig
from nttlab.model.params import NTTParams
from nttlab.model.variants import VariantKind
from nttlab.training.normalizer import fit_normalizer
from nttlab.training.trainer import FinetuneMode, TrainConfig, finetune, pretrain, trainable_parameters
from nttlab.training.windows import make_windows
from tests.factories import build_synthetic_trace


def _arrays_equal(a, b) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


class TestTrainConfig:
    @pytest.mark.parametrize(
        "overrides",
        [{"lr": 0.0}, {"batch_size": 0}, {"epochs": -1}, {"window_stride": 0}, {"seed": -2}],
    )
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            TrainConfig(**overrides)

    def test_to_dict(self):
        assert TrainConfig(epochs=3).to_dict()["finetune_mode"] == "DECODER_ONLY"


class TestTraining:
    """Loops over 36 DELAY windows of 32 packets with a tiny model."""

    def setup_method(self):
        self.base = NTTConfig.tiny()
        dataset = build_synthetic_trace(n_runs=4, n_packets=160)
        normalizer = fit_normalizer(dataset, 32)
        self.delay_windows = make_windows(dataset, 32, 16, Task.DELAY, self.base.schema, normalizer)
        self.mct_windows = make_windows(dataset, 32, 16, Task.MCT, self.base.schema, normalizer)
        self.cfg = TrainConfig(lr=1e-3, batch_size=8, epochs=2, window_stride=16, seed=0)

    def test_zero_epochs_returns_initial_parameters(self):
        params = NTTParams.initialize(self.base, 0)
        before = params.arrays()
        result = pretrain(VariantKind.FULL, self.delay_windows, TrainConfig(epochs=0), params=params)
        assert result.loss_curve == []
        assert result.steps == 0
        assert _arrays_equal(result.params.arrays(), before)

    def test_pretrain_counts_steps_and_epochs(self):
        result = pretrain(VariantKind.FULL, self.delay_windows, self.cfg, base=self.base)
        assert len(result.loss_curve) == 2
        assert result.steps == 2 * 5
        assert all(np.isfinite(result.loss_curve))

    def test_pretrain_is_deterministic(self):
        a = pretrain(VariantKind.FULL, self.delay_windows, self.cfg, base=self.base)
        b = pretrain(VariantKind.FULL, self.delay_windows, self.cfg, base=self.base)
        assert a.loss_curve == b.loss_curve
        assert _arrays_equal(a.params.arrays(), b.params.arrays())

    def test_pretrain_reduces_loss(self):
        cfg = TrainConfig(lr=3e-3, batch_size=8, epochs=8, window_stride=16, seed=0)
        result = pretrain(VariantKind.FULL, self.delay_windows, cfg, base=self.base)
        assert result.loss_curve[-1] < result.loss_curve[0]

    def test_pretrain_needs_delay_windows(self):
        with pytest.raises(UsageError):
            pretrain(VariantKind.FULL, self.mct_windows, self.cfg, base=self.base)

    def test_window_length_must_fit_variant(self):
        with pytest.raises(UsageError):
            pretrain(VariantKind.NO_AGG, self.delay_windows, self.cfg, base=self.base)

    def test_decoder_only_freezes_body(self):
        params = NTTParams.initialize(self.base, 0)
        body_before = {p.name: p.data.copy() for p in params.body()}
        head_before = {p.name: p.data.copy() for p in params.group("head.delay")}
        finetune(params, VariantKind.FULL, self.delay_windows, Task.DELAY, self.cfg)
        for p in params.body():
            np.testing.assert_array_equal(p.data, body_before[p.name])
            assert p.requires_grad
        assert any(not np.array_equal(p.data, head_before[p.name]) for p in params.group("head.delay"))

    def test_full_finetune_moves_body(self):
        params = NTTParams.initialize(self.base, 0)
        before = params["embedding.1.W"].data.copy()
        cfg = TrainConfig(batch_size=8, epochs=1, finetune_mode=FinetuneMode.FULL)
        finetune(params, VariantKind.FULL, self.delay_windows, Task.DELAY, cfg)
        assert not np.array_equal(params["embedding.1.W"].data, before)

    def test_mct_finetune_attaches_head(self):
        params = NTTParams.initialize(self.base, 0)
        result = finetune(params, VariantKind.FULL, self.mct_windows, Task.MCT, self.cfg)
        assert params.has_mct_head
        assert len(result.loss_curve) == 2

    def test_task_mismatch(self):
        params = NTTParams.initialize(self.base, 0)
        with pytest.raises(UsageError):
            finetune(params, VariantKind.FULL, self.delay_windows, Task.MCT, self.cfg)

    def test_trainable_parameters(self):
        params = NTTParams.initialize(self.base, 0)
        decoder = trainable_parameters(params, Task.DELAY, FinetuneMode.DECODER_ONLY)
        assert {p.name for p in decoder} == {
            "head.delay.1.W",
            "head.delay.1.b",
            "head.delay.2.W",
            "head.delay.2.b",
        }
        full = trainable_parameters(params, Task.DELAY, FinetuneMode.FULL)
        assert len(full) == len(params.store)

    def test_divergence_is_reported(self):
        cfg = TrainConfig(lr=1e300, batch_size=8, epochs=1, window_stride=16, seed=0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError) as info:
                pretrain(VariantKind.FULL, self.delay_windows, cfg, base=self.base)
        assert info.value.lr == 1e300
        assert info.value.epoch == 1
        assert info.value.batch_index >= 1
        assert info.value.exit_code == 3

    def test_loss_csv(self, tmp_path):
        result = pretrain(VariantKind.FULL, self.delay_windows, self.cfg, base=self.base)
        path = tmp_path / "loss.csv"
        result.write_loss_curve(str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,loss"
        assert lines[1].startswith("1,")
        assert len(lines) == 3
