"""Run configuration: JSON schema, defaults, validation, and the manifest.

One JSON document with sections env/grader/ppo/run/analysis; every field
has a default mirroring the toolkit's documented values, so the minimal
config is {"experiment": 1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .env import EpisodeLimits, RewardSpec
from .errors import ConfigValidationError
from .grader import GraderBinding, MockRubricConfig
from .ppo import PpoConfig, TrainRunConfig
from .presets import PRESET_IDS

CONFIG_SCHEMA_VERSION = 1
MANIFEST_SCHEMA = "gradeprobe/run-manifest"

DEFAULT_CONFIG: dict[str, Any] = {
    "experiment": 1,
    "env": {
        "max_steps": 8,
        "rating_threshold": 3.5,
        "reward_scale": 3.0,
        "step_penalty": 1.0,
        "step_feature": False,
    },
    "grader": {
        "kind": "mock",
        "endpoint": None,
        "cache": True,
    },
    "ppo": {
        "clip_epsilon": 0.2,
        "epochs_per_batch": 4,
        "episodes_per_batch": 16,
        "learning_rate": 0.05,
        "entropy_coef": 0.01,
        "value_coef": 0.5,
        "grad_norm_clip": 5.0,
        "gamma": 1.0,
        "advantage_normalization": True,
    },
    "run": {
        "total_timesteps": 75_000,
        "num_runs": 10,
        "rng_seed": 0,
    },
    "analysis": {
        "top_fraction": 0.05,
        "window": 200,
    },
}


@dataclass(frozen=True)
class ResolvedConfig:
    """A fully validated config with concrete component objects."""

    experiment: int
    limits: EpisodeLimits
    reward: RewardSpec
    step_feature: bool
    grader: GraderBinding
    ppo: PpoConfig
    run: TrainRunConfig
    top_fraction: float
    window: int
    raw: dict = field(repr=False, default_factory=dict)


def _merge_defaults(document: dict) -> dict:
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    for section, value in document.items():
        if section == "experiment":
            merged["experiment"] = value
            continue
        if section not in merged:
            raise ConfigValidationError(f"{section}: unknown config section")
        if not isinstance(value, dict):
            raise ConfigValidationError(f"{section}: must be an object")
        for key, inner in value.items():
            if key not in merged[section]:
                raise ConfigValidationError(f"{section}.{key}: unknown config field")
            merged[section][key] = inner
    return merged


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigValidationError(message)


def _number(value: object, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{path}: must be a number")
    return float(value)


def _integer(value: object, path: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"{path}: must be an integer")
    return int(value)


def _boolean(value: object, path: str) -> bool:
    _require(isinstance(value, bool), f"{path}: must be a boolean")
    return bool(value)


def resolve_config(document: dict) -> ResolvedConfig:
    if not isinstance(document, dict):
        raise ConfigValidationError("config root: must be a JSON object")
    merged = _merge_defaults(document)

    experiment = merged["experiment"]
    _require(experiment in PRESET_IDS, f"experiment: must be one of {PRESET_IDS}, got {experiment!r}")

    env = merged["env"]
    max_steps = _integer(env["max_steps"], "env.max_steps")
    _require(max_steps >= 1, "env.max_steps: must be >= 1")
    threshold = _number(env["rating_threshold"], "env.rating_threshold")
    _require(0.0 <= threshold <= 4.0, "env.rating_threshold: must lie in [0, 4]")
    scale = _number(env["reward_scale"], "env.reward_scale")
    _require(scale > 0, "env.reward_scale: must be > 0")
    penalty = _number(env["step_penalty"], "env.step_penalty")
    _require(penalty >= 0, "env.step_penalty: must be >= 0")
    step_feature = _boolean(env["step_feature"], "env.step_feature")

    grader = merged["grader"]
    kind = grader["kind"]
    _require(kind in ("mock", "remote"), "grader.kind: must be 'mock' or 'remote'")
    endpoint = grader["endpoint"]
    if kind == "remote":
        _require(isinstance(endpoint, str) and endpoint,
                 "grader.endpoint: required for remote graders")
    cache = _boolean(grader["cache"], "grader.cache")
    try:
        binding = GraderBinding(
            kind=kind,
            endpoint=endpoint,
            mock_config=MockRubricConfig(),
            cache_enabled=cache,
        )
    except ValueError as exc:
        raise ConfigValidationError(f"grader.endpoint: {exc}") from exc

    p = merged["ppo"]
    try:
        ppo = PpoConfig(
            clip_epsilon=_number(p["clip_epsilon"], "ppo.clip_epsilon"),
            epochs_per_batch=_integer(p["epochs_per_batch"], "ppo.epochs_per_batch"),
            episodes_per_batch=_integer(p["episodes_per_batch"], "ppo.episodes_per_batch"),
            learning_rate=_number(p["learning_rate"], "ppo.learning_rate"),
            entropy_coef=_number(p["entropy_coef"], "ppo.entropy_coef"),
            value_coef=_number(p["value_coef"], "ppo.value_coef"),
            grad_norm_clip=_number(p["grad_norm_clip"], "ppo.grad_norm_clip"),
            gamma=_number(p["gamma"], "ppo.gamma"),
            advantage_normalization=_boolean(
                p["advantage_normalization"], "ppo.advantage_normalization"
            ),
        )
    except ValueError as exc:
        raise ConfigValidationError(f"ppo: {exc}") from exc

    r = merged["run"]
    try:
        run = TrainRunConfig(
            total_timesteps=_integer(r["total_timesteps"], "run.total_timesteps"),
            num_runs=_integer(r["num_runs"], "run.num_runs"),
            rng_seed=_integer(r["rng_seed"], "run.rng_seed"),
            experiment=experiment,
        )
    except ValueError as exc:
        raise ConfigValidationError(f"run: {exc}") from exc

    a = merged["analysis"]
    top_fraction = _number(a["top_fraction"], "analysis.top_fraction")
    _require(0 < top_fraction <= 1, "analysis.top_fraction: must lie in (0, 1]")
    window = _integer(a["window"], "analysis.window")
    _require(window >= 1, "analysis.window: must be >= 1")

    try:
        limits = EpisodeLimits(max_steps=max_steps, rating_threshold=threshold)
        reward = RewardSpec(scale=scale, step_penalty=penalty)
    except ValueError as exc:
        raise ConfigValidationError(f"env: {exc}") from exc

    return ResolvedConfig(
        experiment=experiment,
        limits=limits,
        reward=reward,
        step_feature=step_feature,
        grader=binding,
        ppo=ppo,
        run=run,
        top_fraction=top_fraction,
        window=window,
        raw=merged,
    )


def load_config(path: str | Path) -> ResolvedConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError(f"{path}: invalid JSON: {exc}") from exc
    return resolve_config(document)


def run_seed_for(master_seed: int, run_id: int) -> int:
    """Disjoint per-run seeds derived from the master seed by a fixed offset."""
    return master_seed + run_id
