"""Featurizer, softmax policy, sampling, and policy serialization."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gradeprobe.env import ResponseState, action_space_size
from gradeprobe.errors import ConfigValidationError
from gradeprobe.policy import (
    action_distribution,
    default_featurizer,
    featurize,
    greedy_action,
    init_params,
    load_policy,
    sample_action,
    save_policy,
)
from gradeprobe.presets import get_preset

PRESET1 = get_preset(1)
FEAT = default_featurizer(PRESET1.phrases)


class TestFeaturize:
    def test_empty_text_only_bias(self):
        vector = featurize(ResponseState(text=""), FEAT)
        assert vector.shape == (14,)
        assert vector[-1] == 1.0
        assert not vector[:-1].any()

    def test_hand_counted_example(self):
        state = ResponseState(text="water has more mass water has more mass")
        vector = featurize(state, FEAT)
        phrase_idx = PRESET1.phrases.index("water has more mass")
        assert vector[phrase_idx] == pytest.approx(2 / 3)
        assert vector[10] == pytest.approx(8 / 50)  # length
        assert vector[11] == 0.0  # traps
        assert vector[12] == pytest.approx(2 / 10)  # "mass" twice
        assert vector[13] == 1.0

    def test_dimension_matches_inventory(self):
        for preset_id, dim in ((1, 14), (2, 14), (3, 24)):
            cfg = default_featurizer(get_preset(preset_id).phrases)
            assert cfg.dimension == dim
            assert featurize(ResponseState(text="whatever"), cfg).shape == (dim,)

    def test_entries_bounded(self):
        state = ResponseState(text="water is more dense " * 30)
        vector = featurize(state, FEAT)
        assert (vector >= 0).all() and (vector <= 1).all()

    def test_step_feature_behind_flag(self):
        cfg = default_featurizer(PRESET1.phrases, include_step_feature=True, max_steps=8)
        assert cfg.dimension == 15
        vector = featurize(ResponseState(text="x", steps_taken=4), cfg)
        assert vector[13] == pytest.approx(0.5)
        assert vector[14] == 1.0

    def test_deterministic(self):
        state = ResponseState(text="the pitch is different")
        assert np.array_equal(featurize(state, FEAT), featurize(state, FEAT))


class TestActionDistribution:
    def test_zero_output_layer_is_uniform(self, rng):
        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        dist = action_distribution(params, featurize(ResponseState(text="hello"), FEAT))
        assert dist.shape == (25,)
        assert np.all(dist == dist[0])
        assert dist[0] == pytest.approx(1 / 25, abs=1e-12)

    def test_sums_to_one(self, rng):
        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        params.output_weights = rng.standard_normal(params.output_weights.shape)
        params.output_bias = rng.standard_normal(params.output_bias.shape)
        for text in ("", "water is more dense", "a b c d e f"):
            dist = action_distribution(params, featurize(ResponseState(text=text), FEAT))
            assert abs(dist.sum() - 1.0) < 1e-9
            assert (dist > 0).all()

    def test_shift_invariance(self, rng):
        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        params.output_bias = rng.standard_normal(params.output_bias.shape)
        features = featurize(ResponseState(text="the pitch changes"), FEAT)
        before = action_distribution(params, features)
        params.output_bias = params.output_bias + 3.7
        after = action_distribution(params, features)
        np.testing.assert_allclose(before, after, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        with pytest.raises(ConfigValidationError):
            action_distribution(params, np.zeros(7))


class TestSampleAction:
    def test_one_hot(self, rng):
        dist = np.zeros(25)
        dist[13] = 1.0
        assert all(sample_action(dist, rng) == 13 for _ in range(50))

    def test_uniform_frequencies_within_5_sigma(self):
        rng = np.random.default_rng(2024)
        dist = np.full(25, 1 / 25)
        counts = np.zeros(25, dtype=int)
        for _ in range(10_000):
            counts[sample_action(dist, rng)] += 1
        sigma = math.sqrt(10_000 * (1 / 25) * (24 / 25))
        assert np.all(np.abs(counts - 400) <= 5 * sigma)

    def test_same_seed_same_sequence(self):
        dist = np.full(10, 0.1)
        draws = []
        for _ in range(2):
            rng = np.random.default_rng(7)
            draws.append([sample_action(dist, rng) for _ in range(100)])
        assert draws[0] == draws[1]

    def test_greedy_tie_breaks_low(self):
        assert greedy_action(np.full(25, 1 / 25)) == 0


class TestPolicySerialization:
    def test_round_trip(self, rng, tmp_path):
        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        params.output_weights = rng.standard_normal(params.output_weights.shape)
        path = tmp_path / "policy.json"
        save_policy(path, params, FEAT, experiment_id=1, rng_seed=42)
        loaded = load_policy(path)
        assert loaded.experiment_id == 1 and loaded.rng_seed == 42
        assert loaded.featurizer == FEAT
        np.testing.assert_array_equal(loaded.params.output_weights, params.output_weights)
        np.testing.assert_array_equal(loaded.params.hidden_weights, params.hidden_weights)

    def test_dimension_mismatch_detected(self, rng, tmp_path):
        import json

        params = init_params(FEAT.dimension, FEAT.num_actions, rng)
        path = tmp_path / "policy.json"
        save_policy(path, params, FEAT, experiment_id=1, rng_seed=0)
        doc = json.loads(path.read_text())
        doc["featurizer"]["inventory"] = doc["featurizer"]["inventory"][:5]
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigValidationError):
            load_policy(path)

    def test_not_a_policy_file(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text("{}")
        with pytest.raises(ConfigValidationError):
            load_policy(path)


def test_action_space_sizes_match_presets():
    assert action_space_size(get_preset(1).inventory_size) == 25
    assert action_space_size(get_preset(2).inventory_size) == 25
    assert action_space_size(get_preset(3).inventory_size) == 45
