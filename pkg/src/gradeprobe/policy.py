"""Featurized stochastic edit policy with a linear value baseline.

The paper-scale agent encodes the response with a transformer; at desk
scale a fixed featurizer (per-phrase counts, length, trap and relevance
totals, bias) feeds a one-hidden-layer softmax policy so that gradients
stay analytic and training takes seconds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import ResponseState, action_space_size
from .errors import ConfigValidationError
from .grader import DEFAULT_RELEVANCE_UNIGRAMS, DEFAULT_TRAP_NGRAMS
from .textproc import count_ngram, count_phrase, scoring_tokens

HIDDEN_WIDTH = 32

POLICY_SCHEMA = "gradeprobe/policy"
POLICY_VERSION = 1


@dataclass(frozen=True)
class FeaturizerConfig:
    """Feature layout: P phrase counts, length, trap, relevance, [step], bias."""

    inventory: tuple[str, ...]
    trap_ngrams: tuple[str, ...] = tuple(DEFAULT_TRAP_NGRAMS)
    relevance_unigrams: tuple[str, ...] = DEFAULT_RELEVANCE_UNIGRAMS
    phrase_cap: int = 3
    length_cap: int = 50
    trap_cap: int = 5
    relevance_cap: int = 10
    include_step_feature: bool = False
    step_cap: int = 8

    @property
    def dimension(self) -> int:
        return len(self.inventory) + 4 + (1 if self.include_step_feature else 0)

    @property
    def num_actions(self) -> int:
        return action_space_size(len(self.inventory))

    def to_dict(self) -> dict:
        return {
            "inventory": list(self.inventory),
            "trap_ngrams": list(self.trap_ngrams),
            "relevance_unigrams": list(self.relevance_unigrams),
            "phrase_cap": self.phrase_cap,
            "length_cap": self.length_cap,
            "trap_cap": self.trap_cap,
            "relevance_cap": self.relevance_cap,
            "include_step_feature": self.include_step_feature,
            "step_cap": self.step_cap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeaturizerConfig":
        return cls(
            inventory=tuple(data["inventory"]),
            trap_ngrams=tuple(data["trap_ngrams"]),
            relevance_unigrams=tuple(data["relevance_unigrams"]),
            phrase_cap=int(data["phrase_cap"]),
            length_cap=int(data["length_cap"]),
            trap_cap=int(data["trap_cap"]),
            relevance_cap=int(data["relevance_cap"]),
            include_step_feature=bool(data["include_step_feature"]),
            step_cap=int(data["step_cap"]),
        )


def featurize(state: ResponseState, cfg: FeaturizerConfig) -> np.ndarray:
    """Deterministic feature vector in [0, 1]^D for one response state.

    Counts use the same tokenization as the mock grader.
    """
    tokens = scoring_tokens(state.text)
    features = np.empty(cfg.dimension, dtype=np.float64)
    for j, phrase in enumerate(cfg.inventory):
        count = count_phrase(tokens, scoring_tokens(phrase))
        features[j] = min(count, cfg.phrase_cap) / cfg.phrase_cap
    p = len(cfg.inventory)
    features[p] = min(len(tokens), cfg.length_cap) / cfg.length_cap
    trap_total = sum(count_ngram(tokens, scoring_tokens(g)) for g in cfg.trap_ngrams)
    features[p + 1] = min(trap_total, cfg.trap_cap) / cfg.trap_cap
    relevance_total = sum(1 for t in tokens if t in cfg.relevance_unigrams)
    features[p + 2] = min(relevance_total, cfg.relevance_cap) / cfg.relevance_cap
    cursor = p + 3
    if cfg.include_step_feature:
        features[cursor] = min(state.steps_taken, cfg.step_cap) / cfg.step_cap
        cursor += 1
    features[cursor] = 1.0
    return features


@dataclass
class PolicyParameters:
    """Weights of the softmax edit policy and its value baseline."""

    hidden_weights: np.ndarray  # (D, HIDDEN_WIDTH)
    hidden_bias: np.ndarray  # (HIDDEN_WIDTH,)
    output_weights: np.ndarray  # (HIDDEN_WIDTH, A)
    output_bias: np.ndarray  # (A,)
    value_weights: np.ndarray  # (D,)
    value_bias: float

    @property
    def feature_dim(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def num_actions(self) -> int:
        return self.output_bias.shape[0]

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(
            hidden_weights=self.hidden_weights.copy(),
            hidden_bias=self.hidden_bias.copy(),
            output_weights=self.output_weights.copy(),
            output_bias=self.output_bias.copy(),
            value_weights=self.value_weights.copy(),
            value_bias=float(self.value_bias),
        )

    def all_finite(self) -> bool:
        arrays = (self.hidden_weights, self.hidden_bias, self.output_weights,
                  self.output_bias, self.value_weights)
        return all(np.isfinite(a).all() for a in arrays) and np.isfinite(self.value_bias)


def init_params(dim: int, num_actions: int, rng: np.random.Generator) -> PolicyParameters:
    """Random hidden layer, zero output layer: the initial policy is uniform."""
    return PolicyParameters(
        hidden_weights=rng.standard_normal((dim, HIDDEN_WIDTH)) / np.sqrt(dim),
        hidden_bias=np.zeros(HIDDEN_WIDTH),
        output_weights=np.zeros((HIDDEN_WIDTH, num_actions)),
        output_bias=np.zeros(num_actions),
        value_weights=np.zeros(dim),
        value_bias=0.0,
    )


def policy_logits(params: PolicyParameters, features: np.ndarray) -> np.ndarray:
    """Logits for one feature vector or a (N, D) batch."""
    hidden = np.tanh(features @ params.hidden_weights + params.hidden_bias)
    return hidden @ params.output_weights + params.output_bias


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def action_distribution(params: PolicyParameters, features: np.ndarray) -> np.ndarray:
    """Softmax action probabilities; strictly positive, sums to 1."""
    if features.shape[-1] != params.feature_dim:
        raise ConfigValidationError(
            f"feature dimension {features.shape[-1]} does not match policy dimension "
            f"{params.feature_dim}"
        )
    return np.exp(log_softmax(policy_logits(params, features)))


def sample_action(dist: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; reproducible under a fixed generator state."""
    cumulative = np.cumsum(dist)
    index = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(index, len(dist) - 1)


def greedy_action(dist: np.ndarray) -> int:
    """Argmax action; ties break to the lowest index."""
    return int(np.argmax(dist))


def value_estimate(params: PolicyParameters, features: np.ndarray) -> np.ndarray | float:
    return features @ params.value_weights + params.value_bias


@dataclass(frozen=True)
class LoadedPolicy:
    params: PolicyParameters
    featurizer: FeaturizerConfig
    experiment_id: int
    rng_seed: int


def policy_to_dict(
    params: PolicyParameters,
    featurizer: FeaturizerConfig,
    experiment_id: int,
    rng_seed: int,
) -> dict:
    return {
        "schema": POLICY_SCHEMA,
        "version": POLICY_VERSION,
        "experiment_id": experiment_id,
        "rng_seed": rng_seed,
        "featurizer": featurizer.to_dict(),
        "dims": {
            "features": params.feature_dim,
            "hidden": HIDDEN_WIDTH,
            "actions": params.num_actions,
        },
        "hidden_weights": params.hidden_weights.tolist(),
        "hidden_bias": params.hidden_bias.tolist(),
        "output_weights": params.output_weights.tolist(),
        "output_bias": params.output_bias.tolist(),
        "value_weights": params.value_weights.tolist(),
        "value_bias": float(params.value_bias),
    }


def save_policy(
    path: str | Path,
    params: PolicyParameters,
    featurizer: FeaturizerConfig,
    experiment_id: int,
    rng_seed: int,
) -> None:
    doc = policy_to_dict(params, featurizer, experiment_id, rng_seed)
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_policy(path: str | Path) -> LoadedPolicy:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigValidationError(f"cannot read policy file {path}: {exc}") from exc
    if doc.get("schema") != POLICY_SCHEMA:
        raise ConfigValidationError(f"{path}: not a policy file (schema {doc.get('schema')!r})")
    featurizer = FeaturizerConfig.from_dict(doc["featurizer"])
    params = PolicyParameters(
        hidden_weights=np.asarray(doc["hidden_weights"], dtype=np.float64),
        hidden_bias=np.asarray(doc["hidden_bias"], dtype=np.float64),
        output_weights=np.asarray(doc["output_weights"], dtype=np.float64),
        output_bias=np.asarray(doc["output_bias"], dtype=np.float64),
        value_weights=np.asarray(doc["value_weights"], dtype=np.float64),
        value_bias=float(doc["value_bias"]),
    )
    dims = doc["dims"]
    expected = {
        "features": featurizer.dimension,
        "hidden": HIDDEN_WIDTH,
        "actions": featurizer.num_actions,
    }
    actual = {
        "features": params.feature_dim,
        "hidden": params.hidden_weights.shape[1],
        "actions": params.num_actions,
    }
    for key in expected:
        if not dims.get(key) == expected[key] == actual[key]:
            raise ConfigValidationError(
                f"{path}: {key} dimension mismatch (declared {dims.get(key)}, "
                f"featurizer implies {expected[key]}, arrays carry {actual[key]})"
            )
    return LoadedPolicy(
        params=params,
        featurizer=featurizer,
        experiment_id=int(doc["experiment_id"]),
        rng_seed=int(doc["rng_seed"]),
    )


def default_featurizer(inventory: tuple[str, ...], include_step_feature: bool = False,
                       max_steps: int = 8) -> FeaturizerConfig:
    return FeaturizerConfig(
        inventory=tuple(inventory),
        include_step_feature=include_step_feature,
        step_cap=max_steps,
    )


def make_stochastic_policy(params: PolicyParameters, cfg: FeaturizerConfig):
    """Policy closure for run_episode: featurize, softmax, sample."""
    from .env import action_from_index

    inventory_size = len(cfg.inventory)

    def policy(state: ResponseState, rng: np.random.Generator):
        dist = action_distribution(params, featurize(state, cfg))
        return action_from_index(sample_action(dist, rng), inventory_size)

    return policy


def make_greedy_policy(params: PolicyParameters, cfg: FeaturizerConfig):
    """Deterministic argmax policy used by the probe command."""
    from .env import action_from_index

    inventory_size = len(cfg.inventory)

    def policy(state: ResponseState, rng: np.random.Generator):
        dist = action_distribution(params, featurize(state, cfg))
        return action_from_index(greedy_action(dist), inventory_size)

    return policy
