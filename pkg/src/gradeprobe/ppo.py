"""Proximal policy optimization over collected revision episodes.

Monte-Carlo returns with a linear value baseline, normalized advantages,
the clipped surrogate objective with entropy and value terms, analytic
gradients, global-norm clipping, and plain gradient ascent. All numeric
defaults here are artifact choices recorded in the emitted run metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .env import (
    EpisodeLimits,
    EpisodeRecord,
    ResponseState,
    RewardSpec,
    run_episode,
)
from .errors import TrainingError
from .policy import (
    FeaturizerConfig,
    PolicyParameters,
    featurize,
    init_params,
    log_softmax,
    make_stochastic_policy,
    policy_logits,
)

ADVANTAGE_EPSILON = 1e-8


@dataclass(frozen=True)
class PpoConfig:
    clip_epsilon: float = 0.2
    epochs_per_batch: int = 4
    episodes_per_batch: int = 16
    learning_rate: float = 0.05
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    grad_norm_clip: float = 5.0
    gamma: float = 1.0
    advantage_normalization: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError("clip_epsilon must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.epochs_per_batch < 1 or self.episodes_per_batch < 1:
            raise ValueError("epochs_per_batch and episodes_per_batch must be >= 1")


@dataclass(frozen=True)
class TrainRunConfig:
    total_timesteps: int = 75_000
    num_runs: int = 10
    rng_seed: int = 0
    experiment: int = 1

    def __post_init__(self) -> None:
        if self.total_timesteps < 1:
            raise ValueError("total_timesteps must be >= 1")
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")


def returns_to_go(episode: EpisodeRecord | Sequence[float], gamma: float) -> np.ndarray:
    """Discounted suffix sums G_t; with gamma=1, G_0 is the episode return."""
    if isinstance(episode, EpisodeRecord):
        rewards = [t.reward for t in episode.transitions]
    else:
        rewards = list(episode)
    if not rewards:
        raise ValueError("episode has no rewards")
    out = np.empty(len(rewards), dtype=np.float64)
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


@dataclass
class PpoBatch:
    """Flattened per-step tensors plus constants frozen at collection time."""

    features: np.ndarray  # (N, D)
    actions: np.ndarray  # (N,)
    returns: np.ndarray  # (N,)
    logp_old: np.ndarray  # (N,)
    advantages: np.ndarray  # (N,)


@dataclass(frozen=True)
class EpochDiagnostics:
    mean_ratio: float
    clip_fraction: float
    entropy: float
    value_loss: float
    surrogate: float
    objective: float


def episode_states(episode: EpisodeRecord) -> list[ResponseState]:
    """The pre-action states of an episode, in step order."""
    texts = [episode.initial_text] + [t.text for t in episode.transitions[:-1]]
    return [ResponseState(text=text, steps_taken=i) for i, text in enumerate(texts)]


def prepare_batch(
    params: PolicyParameters,
    episodes: Sequence[EpisodeRecord],
    cfg: PpoConfig,
    feat_cfg: FeaturizerConfig,
) -> PpoBatch:
    """Rebuild features, returns, and old log-probs for a collected batch.

    Old log-probs and the value baseline are evaluated at `params`, which
    must be the exact parameters the batch was collected under.
    """
    from .env import action_to_index

    feats, actions, returns = [], [], []
    inventory_size = len(feat_cfg.inventory)
    for episode in episodes:
        for state, transition in zip(episode_states(episode), episode.transitions):
            feats.append(featurize(state, feat_cfg))
            actions.append(action_to_index(transition.action, inventory_size))
        returns.append(returns_to_go(episode, cfg.gamma))

    features = np.vstack(feats)
    action_idx = np.asarray(actions, dtype=np.int64)
    g = np.concatenate(returns)

    logp = log_softmax(policy_logits(params, features))
    logp_old = logp[np.arange(len(action_idx)), action_idx]
    values = features @ params.value_weights + params.value_bias
    advantages = g - values
    if cfg.advantage_normalization:
        advantages = (advantages - advantages.mean()) / (advantages.std() + ADVANTAGE_EPSILON)
    return PpoBatch(
        features=features,
        actions=action_idx,
        returns=g,
        logp_old=logp_old,
        advantages=advantages,
    )


def _forward(params: PolicyParameters, batch: PpoBatch, cfg: PpoConfig):
    n = len(batch.actions)
    hidden = np.tanh(batch.features @ params.hidden_weights + params.hidden_bias)
    logits = hidden @ params.output_weights + params.output_bias
    logp = log_softmax(logits)
    probs = np.exp(logp)

    logp_taken = logp[np.arange(n), batch.actions]
    ratio = np.exp(logp_taken - batch.logp_old)
    clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
    surrogate_terms = np.minimum(ratio * batch.advantages, clipped * batch.advantages)
    surrogate = surrogate_terms.mean()

    entropies = -(probs * logp).sum(axis=1)
    entropy = entropies.mean()

    values = batch.features @ params.value_weights + params.value_bias
    value_errors = values - batch.returns
    value_loss = (value_errors**2).mean()

    objective = surrogate + cfg.entropy_coef * entropy - cfg.value_coef * value_loss
    return {
        "hidden": hidden,
        "probs": probs,
        "logp": logp,
        "ratio": ratio,
        "entropies": entropies,
        "value_errors": value_errors,
        "surrogate": surrogate,
        "entropy": entropy,
        "value_loss": value_loss,
        "objective": objective,
    }


def ppo_objective(params: PolicyParameters, batch: PpoBatch, cfg: PpoConfig) -> float:
    """The full clipped objective as a scalar; used by gradient checks."""
    return float(_forward(params, batch, cfg)["objective"])


def ppo_gradients(
    params: PolicyParameters, batch: PpoBatch, cfg: PpoConfig
) -> tuple[float, dict[str, np.ndarray], EpochDiagnostics]:
    """Analytic ascent gradients of the objective for every parameter block."""
    n = len(batch.actions)
    fwd = _forward(params, batch, cfg)
    hidden, probs, logp = fwd["hidden"], fwd["probs"], fwd["logp"]
    ratio = fwd["ratio"]

    # d(surrogate)/d(ratio): the unclipped branch when it is the min, else
    # zero (the clipped branch is constant wherever it differs from ratio).
    clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
    unclipped_active = ratio * batch.advantages <= clipped * batch.advantages
    dsurr_dratio = np.where(unclipped_active, batch.advantages, 0.0)

    coeff = dsurr_dratio * ratio / n  # chain through d(ratio)/d(logp_taken)
    dlogits = -probs * coeff[:, None]
    dlogits[np.arange(n), batch.actions] += coeff

    # Entropy term: dH/dlogits_k = -p_k (log p_k + H).
    dlogits += cfg.entropy_coef * (-(probs * (logp + fwd["entropies"][:, None]))) / n

    grads: dict[str, np.ndarray] = {}
    grads["output_weights"] = hidden.T @ dlogits
    grads["output_bias"] = dlogits.sum(axis=0)
    dhidden = dlogits @ params.output_weights.T
    dpre = dhidden * (1.0 - hidden**2)
    grads["hidden_weights"] = batch.features.T @ dpre
    grads["hidden_bias"] = dpre.sum(axis=0)

    dvalues = -cfg.value_coef * 2.0 * fwd["value_errors"] / n
    grads["value_weights"] = batch.features.T @ dvalues
    grads["value_bias"] = np.asarray(dvalues.sum())

    diag = EpochDiagnostics(
        mean_ratio=float(ratio.mean()),
        clip_fraction=float(
            ((ratio < 1.0 - cfg.clip_epsilon) | (ratio > 1.0 + cfg.clip_epsilon)).mean()
        ),
        entropy=float(fwd["entropy"]),
        value_loss=float(fwd["value_loss"]),
        surrogate=float(fwd["surrogate"]),
        objective=float(fwd["objective"]),
    )
    return float(fwd["objective"]), grads, diag


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their global norm is at most max_norm."""
    total = float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for key in grads:
            grads[key] = grads[key] * scale
    return total


def apply_gradients(
    params: PolicyParameters, grads: dict[str, np.ndarray], learning_rate: float
) -> PolicyParameters:
    return PolicyParameters(
        hidden_weights=params.hidden_weights + learning_rate * grads["hidden_weights"],
        hidden_bias=params.hidden_bias + learning_rate * grads["hidden_bias"],
        output_weights=params.output_weights + learning_rate * grads["output_weights"],
        output_bias=params.output_bias + learning_rate * grads["output_bias"],
        value_weights=params.value_weights + learning_rate * grads["value_weights"],
        value_bias=float(params.value_bias + learning_rate * grads["value_bias"]),
    )


def ppo_update(
    params: PolicyParameters,
    episodes: Sequence[EpisodeRecord],
    cfg: PpoConfig,
    feat_cfg: FeaturizerConfig,
) -> tuple[PolicyParameters, list[EpochDiagnostics]]:
    """Run epochs_per_batch ascent steps on one collected batch."""
    batch = prepare_batch(params, episodes, cfg, feat_cfg)
    current = params
    diagnostics: list[EpochDiagnostics] = []
    for epoch in range(cfg.epochs_per_batch):
        objective, grads, diag = ppo_gradients(current, batch, cfg)
        diagnostics.append(diag)
        finite = np.isfinite(objective) and all(np.isfinite(g).all() for g in grads.values())
        if not finite:
            raise TrainingError(
                f"non-finite loss or gradient at epoch {epoch}: objective={objective!r}, "
                f"diagnostics={diag!r}"
            )
        clip_global_norm(grads, cfg.grad_norm_clip)
        current = apply_gradients(current, grads, cfg.learning_rate)
        if not current.all_finite():
            raise TrainingError(f"non-finite parameters after epoch {epoch}: {diag!r}")
    return current, diagnostics


EpisodeSink = Callable[[EpisodeRecord], None]
DiagnosticsSink = Callable[[int, list[EpochDiagnostics]], None]


@dataclass
class TrainDeps:
    """Everything one training run needs besides the run config."""

    phrases: tuple[str, ...]
    featurizer: FeaturizerConfig
    grader: object  # anything with .grade(texts)
    seed_responses: tuple[str, ...]
    limits: EpisodeLimits = field(default_factory=EpisodeLimits)
    reward_spec: RewardSpec = field(default_factory=RewardSpec)
    ppo: PpoConfig = field(default_factory=PpoConfig)


def train_run(
    deps: TrainDeps,
    *,
    total_timesteps: int,
    run_seed: int,
    experiment_id: int,
    run_id: int = 0,
    episode_sink: EpisodeSink | None = None,
    diagnostics_sink: DiagnosticsSink | None = None,
) -> PolicyParameters:
    """One training run: collect a batch, update, repeat until the step budget.

    A single generator seeded with run_seed drives parameter init, seed
    response sampling, and action sampling, so identical inputs reproduce
    identical episode logs byte for byte.
    """
    if not deps.seed_responses:
        raise ValueError("no seed responses to sample from")
    rng = np.random.default_rng(run_seed)
    params = init_params(deps.featurizer.dimension, deps.featurizer.num_actions, rng)

    steps = 0
    episode_index = 0
    update_index = 0
    while steps < total_timesteps:
        policy = make_stochastic_policy(params, deps.featurizer)
        batch: list[EpisodeRecord] = []
        for _ in range(deps.ppo.episodes_per_batch):
            seed_text = deps.seed_responses[int(rng.integers(len(deps.seed_responses)))]
            record = run_episode(
                seed_text,
                policy,
                deps.grader,
                deps.phrases,
                deps.limits,
                deps.reward_spec,
                rng,
                experiment_id=experiment_id,
                run_id=run_id,
                episode_index=episode_index,
            )
            episode_index += 1
            steps += len(record.transitions)
            batch.append(record)
            if episode_sink is not None:
                episode_sink(record)
        params, diags = ppo_update(params, batch, deps.ppo, deps.featurizer)
        if diagnostics_sink is not None:
            diagnostics_sink(update_index, diags)
        update_index += 1
    return params
