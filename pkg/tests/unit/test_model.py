"""
Unit tests for features, aggregation, parameters, the forward pass and variants.
"""

from dataclasses import replace

import numpy as np
import pytest

from nttlab.core.errors import CheckpointError, ConfigError, ShapeError, WindowError
from nttlab.model.aggregation import AggregationKind, AggregationScheme, aggregate_multiscale
from nttlab.model.config import NTTConfig
from nttlab.model.features import FeatureSchema, featurize_window, mask_features, mask_last_delay
from nttlab.model.network import (
    embed,
    encode,
    forward_delay,
    forward_mct,
    log_size_feature,
    predict_delay,
    predict_log_mct,
)
from nttlab.model.params import GROUPS, NTTParams, attach_mct_head
from nttlab.model.variants import VariantKind, build_variant, variant_config
from nttlab.numerics.tensor import Parameter, Tensor
from nttlab.training.normalizer import Normalizer
from tests.factories import build_synthetic_trace


def _aggregation_params(scheme: AggregationScheme, d: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    f = scheme.factor
    return {
        "level1.W": Parameter(rng.standard_normal((f * d, d)), "level1.W"),
        "level1.b": Parameter(rng.standard_normal(d), "level1.b"),
        "level2.W": Parameter(rng.standard_normal((f * d, d)), "level2.W"),
        "level2.b": Parameter(rng.standard_normal(d), "level2.b"),
    }


class TestAggregationScheme:
    def test_paper_arithmetic(self):
        scheme = AggregationScheme.paper()
        assert scheme.raw_count + scheme.level1_groups * 9 + scheme.level2_groups * 81 == 1024
        assert scheme.window_length == 1024
        assert scheme.n_slots == 48

    def test_tiny_arithmetic(self):
        scheme = AggregationScheme.tiny()
        assert scheme.window_length == 32
        assert scheme.n_slots == 12

    def test_slot_of_packet_boundaries(self):
        scheme = AggregationScheme.paper()
        assert scheme.slot_of_packet(0) == 0
        assert scheme.slot_of_packet(809) == 9
        assert scheme.slot_of_packet(810) == 10
        assert scheme.slot_of_packet(1007) == 31
        assert scheme.slot_of_packet(1008) == 32
        assert scheme.slot_of_packet(1023) == 47
        with pytest.raises(IndexError):
            scheme.slot_of_packet(1024)

    def test_invalid_scheme(self):
        with pytest.raises(ConfigError):
            AggregationScheme(raw_count=4, level1_groups=2, level2_groups=1, factor=1)
        with pytest.raises(ConfigError):
            AggregationScheme(0, 0, 0, 2)


class TestAggregation:
    """Multi-timescale aggregation on random embeddings."""

    def setup_method(self):
        self.scheme = AggregationScheme.paper()
        self.d = 3
        self.params = _aggregation_params(self.scheme, self.d)
        self.E = np.random.default_rng(1).standard_normal((1, 1024, self.d))

    def test_output_shape(self):
        out = aggregate_multiscale(Tensor(self.E), self.params, self.scheme)
        assert out.shape == (1, 48, self.d)

    def test_raw_region_passes_through(self):
        out = aggregate_multiscale(Tensor(self.E), self.params, self.scheme)
        np.testing.assert_array_equal(out.data[0, -16:], self.E[0, -16:])

    @pytest.mark.parametrize("packet", [0, 500, 809, 810, 900, 1007, 1008, 1023])
    def test_perturbation_stays_in_its_slot(self, packet):
        base = aggregate_multiscale(Tensor(self.E), self.params, self.scheme).data
        bumped = self.E.copy()
        bumped[0, packet] += 1.0
        out = aggregate_multiscale(Tensor(bumped), self.params, self.scheme).data
        changed = np.flatnonzero(np.any(out[0] != base[0], axis=1))
        assert changed.tolist() == [self.scheme.slot_of_packet(packet)]

    def test_wrong_length_rejected(self):
        with pytest.raises(ShapeError):
            aggregate_multiscale(Tensor(self.E[:, 1:]), self.params, self.scheme)


class TestFeatures:
    """Feature layout and masking of single windows."""

    def setup_method(self):
        self.dataset = build_synthetic_trace(n_runs=2, n_packets=64)
        self.run = self.dataset.runs()[0]
        self.schema = FeatureSchema()
        self.scaler = Normalizer.identity()

    def test_schema_columns(self):
        assert self.schema.width == 7
        assert (self.schema.dt_col, self.schema.size_col, self.schema.receiver_col) == (0, 1, 2)
        assert self.schema.delay_col == 5
        assert self.schema.mask_col == 6
        narrow = FeatureSchema(use_size=False, use_delay=False, n_receivers=2)
        assert narrow.width == 4
        assert narrow.size_col is None and narrow.delay_col is None

    def test_window_layout(self):
        window = featurize_window(self.run[:32], self.schema, self.scaler, 32)
        newest = self.run[31]
        assert window.features.shape == (32, 7)
        assert window.target_delay == newest.delay
        assert window.features[-1, 0] == 0.0
        assert np.all(window.features[:, 0] <= 0.0)
        assert window.features[-1, 1] == newest.size
        assert window.features[-1, 5] == newest.delay
        assert window.features[-1, 2 + newest.receiver_id] == 1.0
        np.testing.assert_array_equal(window.features[:, 2:5].sum(axis=1), np.ones(32))
        assert not window.features[:, 6].any()

    def test_mask_hides_newest_delay_only(self):
        window = mask_last_delay(featurize_window(self.run[:32], self.schema, self.scaler, 32))
        assert window.masked
        assert window.features[-1, 5] == 0.0
        assert window.features[-1, 6] == 1.0
        assert window.features[-2, 5] == self.run[30].delay
        assert window.target_delay == self.run[31].delay

    def test_mask_without_delay_column_is_noop(self):
        schema = FeatureSchema(use_delay=False)
        window = featurize_window(self.run[:32], schema, self.scaler, 32)
        masked = mask_last_delay(window)
        assert masked.mask_skipped
        assert not masked.masked
        np.testing.assert_array_equal(masked.features, window.features)

    def test_too_few_records(self):
        with pytest.raises(WindowError):
            featurize_window(self.run[:10], self.schema, self.scaler, 32)

    def test_mixed_runs_rejected(self):
        mixed = self.run[-16:] + self.dataset.runs()[1][:16]
        with pytest.raises(WindowError):
            featurize_window(mixed, self.schema, self.scaler, 32)

    def test_receiver_outside_one_hot(self):
        with pytest.raises(WindowError):
            featurize_window(self.run[:32], FeatureSchema(n_receivers=1), self.scaler, 32)

    def test_mask_features_batched(self):
        batch = np.ones((2, 4, self.schema.width))
        masked = mask_features(batch, self.schema)
        assert np.all(masked[:, -1, 5] == 0.0)
        assert np.all(masked[:, -1, 6] == 1.0)
        assert np.all(batch[:, -1, 5] == 1.0)


class TestParams:
    def setup_method(self):
        self.config = NTTConfig.tiny()
        self.params = NTTParams.initialize(self.config, seed=3)

    def test_groups_partition_the_store(self):
        names = [p.name for group in GROUPS for p in self.params.group(group)]
        assert sorted(names) == sorted(self.params.store.names())
        assert self.params.group("head.mct") == []

    def test_init_ranges(self):
        W = self.params["embedding.1.W"].data
        assert np.all(np.abs(W) <= np.sqrt(1.0 / self.config.schema.width))
        assert not self.params["embedding.1.b"].data.any()
        assert not self.params["positional"].data.any()
        np.testing.assert_array_equal(self.params["encoder.0.ln1.gain"].data, np.ones(8))

    def test_same_seed_same_values(self):
        again = NTTParams.initialize(self.config, seed=3)
        for name, value in self.params.arrays().items():
            np.testing.assert_array_equal(value, again.arrays()[name])

    def test_mct_head_does_not_shift_body(self):
        with_head = attach_mct_head(NTTParams.initialize(self.config, seed=3), seed=3)
        assert with_head.has_mct_head
        assert with_head["head.mct.1.W"].shape == (9, 8)
        for p in self.params.store:
            np.testing.assert_array_equal(p.data, with_head[p.name].data)

    def test_unknown_group(self):
        with pytest.raises(ValueError):
            self.params.group("decoder")

    def test_copy_is_independent(self):
        clone = self.params.copy()
        clone["head.delay.2.b"].assign(np.array([5.0]))
        assert self.params["head.delay.2.b"].data[0] == 0.0

    def test_load_from_other_variant_names_shapes(self):
        other = variant_config(VariantKind.NO_DELAY, 3, base=self.config)
        with pytest.raises(CheckpointError, match="shape"):
            NTTParams.from_arrays(other, self.params.arrays())

    def test_load_with_unknown_names(self):
        arrays = dict(self.params.arrays())
        arrays["extra.W"] = np.zeros(2)
        with pytest.raises(CheckpointError):
            self.params.load_arrays(arrays)


class TestForward:
    """Forward pass shapes and invariances on the tiny architecture."""

    def setup_method(self):
        self.config = NTTConfig.tiny()
        self.params = NTTParams.initialize(self.config, seed=0)
        rng = np.random.default_rng(11)
        self.features = rng.standard_normal((3, 32, self.config.schema.width))

    def test_delay_output_shape(self):
        assert forward_delay(self.features, self.params).shape == (3,)
        assert forward_delay(self.features[0], self.params).shape == (1,)

    def test_delay_head_reads_newest_slot_only(self):
        rng = np.random.default_rng(5)
        C = rng.standard_normal((2, self.config.n_slots, self.config.d_model))
        other = C.copy()
        other[:, :-1] += 1.0
        a = predict_delay(C, self.params).data
        np.testing.assert_array_equal(a, predict_delay(other, self.params).data)
        other[:, -1] += 1.0
        assert not np.array_equal(a, predict_delay(other, self.params).data)

    def test_embedding_rows_independent(self):
        base = embed(self.features, self.params).data
        bumped = self.features.copy()
        bumped[0, 5] += 1.0
        out = embed(bumped, self.params).data
        changed = np.argwhere(np.any(out != base, axis=-1))
        assert changed.tolist() == [[0, 5]]

    def test_embedding_rejects_wrong_width(self):
        with pytest.raises(ShapeError):
            embed(self.features[..., :-1], self.params)

    def test_masking_hides_newest_delay(self):
        """Two windows that differ only in the newest delay predict identically once masked."""
        schema = self.config.schema
        other = self.features.copy()
        other[:, -1, schema.delay_col] += 3.0
        a = forward_delay(mask_features(self.features, schema), self.params).data
        b = forward_delay(mask_features(other, schema), self.params).data
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(
            forward_delay(self.features, self.params).data, forward_delay(other, self.params).data
        )

    def test_batch_rows_do_not_interact(self):
        whole = forward_delay(self.features, self.params).data
        single = forward_delay(self.features[1:2], self.params).data
        np.testing.assert_allclose(single, whole[1:2], rtol=0, atol=1e-12)

    def test_zero_layers_encoder_is_identity(self):
        params = NTTParams.initialize(NTTConfig.tiny(n_layers=0), seed=0)
        S = np.random.default_rng(2).standard_normal((1, 12, 8))
        np.testing.assert_array_equal(encode(S, params).data, S)

    def test_mct_needs_head(self):
        with pytest.raises(ShapeError):
            forward_mct(self.features, np.zeros(3), self.params)

    def test_mct_output(self):
        attach_mct_head(self.params, seed=0)
        out = forward_mct(self.features, np.zeros(3), self.params)
        assert out.shape == (3,)
        assert np.all(np.isfinite(out.data))

    def test_mct_size_batch_mismatch(self):
        attach_mct_head(self.params, seed=0)
        with pytest.raises(ShapeError):
            forward_mct(self.features, np.zeros(2), self.params)

    def test_log_size_feature(self):
        z = log_size_feature([np.e, np.e**3], (1.0, 2.0))
        np.testing.assert_allclose(z, [0.0, 1.0])
        with pytest.raises(ValueError):
            log_size_feature([0], (0.0, 1.0))

    def test_predict_log_mct_from_encoding(self):
        attach_mct_head(self.params, seed=0)
        C = np.random.default_rng(4).standard_normal((2, 12, 8))
        assert predict_log_mct(C, [1000, 2000], self.params).shape == (2,)


class TestVariants:
    def setup_method(self):
        self.base = NTTConfig.tiny()

    def test_window_lengths(self):
        assert variant_config(VariantKind.FULL, 0, self.base).window_length == 32
        assert variant_config(VariantKind.NO_AGG, 0, self.base).window_length == 12
        assert variant_config(VariantKind.FIXED_AGG, 0, self.base).window_length == 24

    def test_schemas(self):
        assert not variant_config(VariantKind.NO_DELAY, 0, self.base).schema.use_delay
        assert not variant_config(VariantKind.NO_SIZE, 0, self.base).schema.use_size
        assert variant_config(VariantKind.NO_SIZE, 0, self.base).schema.width == 6

    @pytest.mark.parametrize("kind", list(VariantKind))
    def test_every_variant_runs(self, kind):
        config, params = build_variant(kind, 0, self.base)
        features = np.random.default_rng(0).standard_normal((2, config.window_length, config.schema.width))
        assert forward_delay(features, params).shape == (2,)
        assert config.n_slots == 12

    def test_aggregation_parameters_per_variant(self):
        _, no_agg = build_variant(VariantKind.NO_AGG, 0, self.base)
        _, fixed = build_variant(VariantKind.FIXED_AGG, 0, self.base)
        assert no_agg.group("aggregation") == []
        assert sorted(fixed.aggregation_params()) == ["fixed.W", "fixed.b"]
        assert fixed["aggregation.fixed.W"].shape == (16, 8)

    def test_seed_is_recorded(self):
        config = variant_config(VariantKind.FULL, 9, self.base)
        assert config.seed == 9
        assert replace(config, seed=0) == variant_config(VariantKind.FULL, 0, self.base)
        assert config.aggregation is AggregationKind.MULTISCALE
