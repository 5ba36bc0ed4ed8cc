"""Revision environment: response states, edit actions, rewards, episodes.

The agent revises a short free-text answer one edit at a time: insert an
inventory phrase at the front or end of the response, or delete one of
five equal token segments. After every edit the response is re-graded
and the agent is rewarded by the scaled change in expected rating minus
a fixed per-revision penalty. An episode ends when the expected rating
clears a threshold or the revision cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import InvalidActionError
from .textproc import normalize_whitespace

NUM_CLASSES = 5
NUM_SEGMENTS = 5


@dataclass(frozen=True)
class RatingDistribution:
    """Probability vector over the five rating classes.

    Internal classes run 0..4; display ratings are class + 1.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) != NUM_CLASSES:
            raise ValueError(f"expected {NUM_CLASSES} probabilities, got {len(self.probs)}")
        for p in self.probs:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range [0, 1]: {p}")
        total = sum(self.probs)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_probs(cls, probs: Sequence[float]) -> "RatingDistribution":
        return cls(tuple(float(p) for p in probs))


def expected_rating(dist: RatingDistribution) -> float:
    """Mean rating class, sum of k * p_k, in [0, 4]."""
    return sum(k * p for k, p in enumerate(dist.probs))


class ActionKind(str, Enum):
    INSERT = "insert"
    DELETE = "delete"


class InsertLocation(str, Enum):
    FRONT = "front"
    END = "end"


class Termination(str, Enum):
    THRESHOLD_REACHED = "threshold_reached"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class RevisionAction:
    """One edit: insert(phrase, front|end) or delete(fifth-segment index)."""

    kind: ActionKind
    phrase_index: int | None = None
    location: InsertLocation | None = None
    segment_index: int | None = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.INSERT:
            if self.phrase_index is None or self.location is None or self.segment_index is not None:
                raise ValueError("insert actions need phrase_index and location only")
        elif self.kind is ActionKind.DELETE:
            if self.segment_index is None or self.phrase_index is not None or self.location is not None:
                raise ValueError("delete actions need segment_index only")
        else:  # pragma: no cover - enum exhausts the kinds
            raise ValueError(f"unknown action kind: {self.kind}")

    @classmethod
    def insert(cls, phrase_index: int, location: InsertLocation) -> "RevisionAction":
        return cls(kind=ActionKind.INSERT, phrase_index=phrase_index, location=location)

    @classmethod
    def delete(cls, segment_index: int) -> "RevisionAction":
        return cls(kind=ActionKind.DELETE, segment_index=segment_index)

    def to_dict(self) -> dict:
        if self.kind is ActionKind.INSERT:
            return {
                "kind": "insert",
                "phrase_index": self.phrase_index,
                "location": self.location.value,
            }
        return {"kind": "delete", "segment_index": self.segment_index}

    @classmethod
    def from_dict(cls, data: dict) -> "RevisionAction":
        if data["kind"] == "insert":
            return cls.insert(int(data["phrase_index"]), InsertLocation(data["location"]))
        if data["kind"] == "delete":
            return cls.delete(int(data["segment_index"]))
        raise ValueError(f"unknown action kind: {data['kind']!r}")


def action_space_size(inventory_size: int) -> int:
    """2 insert locations per phrase plus the five delete segments."""
    return 2 * inventory_size + NUM_SEGMENTS


def action_from_index(index: int, inventory_size: int) -> RevisionAction:
    """Map a flat action index to an action.

    Layout: [0, P) front inserts, [P, 2P) end inserts, [2P, 2P+5) deletes.
    """
    size = action_space_size(inventory_size)
    if not 0 <= index < size:
        raise InvalidActionError(f"action index {index} outside [0, {size})")
    if index < inventory_size:
        return RevisionAction.insert(index, InsertLocation.FRONT)
    if index < 2 * inventory_size:
        return RevisionAction.insert(index - inventory_size, InsertLocation.END)
    return RevisionAction.delete(index - 2 * inventory_size)


def action_to_index(action: RevisionAction, inventory_size: int) -> int:
    if action.kind is ActionKind.INSERT:
        if not 0 <= action.phrase_index < inventory_size:
            raise InvalidActionError(
                f"phrase_index {action.phrase_index} outside inventory of size {inventory_size}"
            )
        offset = 0 if action.location is InsertLocation.FRONT else inventory_size
        return offset + action.phrase_index
    return 2 * inventory_size + action.segment_index


@dataclass(frozen=True)
class ResponseState:
    """The response under revision. Tokens are always derived, never cached."""

    text: str
    steps_taken: int = 0

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


@dataclass(frozen=True)
class EpisodeLimits:
    """Step cap and the expected-rating termination threshold (0..4 scale)."""

    max_steps: int = 8
    rating_threshold: float = 3.5

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 <= self.rating_threshold <= 4.0:
            raise ValueError("rating_threshold must lie in [0, 4]")


@dataclass(frozen=True)
class RewardSpec:
    """Reward = scale * (new expected rating - old) - step_penalty."""

    scale: float = 3.0
    step_penalty: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if self.step_penalty < 0:
            raise ValueError("step_penalty must be >= 0")


def segment_bounds(state: ResponseState) -> list[tuple[int, int]]:
    """Token-index ranges of the five delete segments.

    Segment i covers [floor(i*n/5), floor((i+1)*n/5)); segments are
    contiguous, disjoint, cover all tokens, and may be empty when n < 5.
    """
    n = len(state.tokens)
    return [(i * n // NUM_SEGMENTS, (i + 1) * n // NUM_SEGMENTS) for i in range(NUM_SEGMENTS)]


def apply_action(
    state: ResponseState, action: RevisionAction, phrases: Sequence[str]
) -> ResponseState:
    """Apply one edit and return the successor state; the input is untouched.

    Inserts join with a single space. Deletes drop the segment's tokens
    and rejoin the remainder with single spaces; deleting an empty
    segment is a legal no-op that still consumes a step.
    """
    if action.kind is ActionKind.INSERT:
        if not 0 <= action.phrase_index < len(phrases):
            raise InvalidActionError(
                f"phrase_index {action.phrase_index} outside inventory of size {len(phrases)}"
            )
        phrase = phrases[action.phrase_index]
        if not state.text:
            text = phrase
        elif action.location is InsertLocation.FRONT:
            text = f"{phrase} {state.text}"
        else:
            text = f"{state.text} {phrase}"
    else:
        if not 0 <= action.segment_index < NUM_SEGMENTS:
            raise InvalidActionError(f"segment_index {action.segment_index} outside [0, 5)")
        tokens = state.tokens
        start, end = segment_bounds(state)[action.segment_index]
        text = " ".join(tokens[:start] + tokens[end:])
    return ResponseState(text=text, steps_taken=state.steps_taken + 1)


def step_reward(
    old: RatingDistribution, new: RatingDistribution, spec: RewardSpec = RewardSpec()
) -> float:
    """Scaled expected-rating delta minus the per-revision penalty."""
    return spec.scale * (expected_rating(new) - expected_rating(old)) - spec.step_penalty


@dataclass(frozen=True)
class Transition:
    """One revision: the text after the edit, its rating, and the reward."""

    text: str
    action: RevisionAction
    rating: RatingDistribution
    reward: float

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "action": self.action.to_dict(),
            "rating": list(self.rating.probs),
            "reward": self.reward,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transition":
        return cls(
            text=data["text"],
            action=RevisionAction.from_dict(data["action"]),
            rating=RatingDistribution.from_probs(data["rating"]),
            reward=float(data["reward"]),
        )


@dataclass(frozen=True)
class EpisodeRecord:
    """One audited response: the revision sequence and its return."""

    experiment_id: int
    run_id: int
    episode_index: int
    initial_text: str
    transitions: tuple[Transition, ...]
    episode_return: float
    termination: Termination

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "run_id": self.run_id,
            "episode_index": self.episode_index,
            "initial_text": self.initial_text,
            "transitions": [t.to_dict() for t in self.transitions],
            "episode_return": self.episode_return,
            "termination": self.termination.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EpisodeRecord":
        return cls(
            experiment_id=int(data["experiment_id"]),
            run_id=int(data["run_id"]),
            episode_index=int(data["episode_index"]),
            initial_text=data["initial_text"],
            transitions=tuple(Transition.from_dict(t) for t in data["transitions"]),
            episode_return=float(data["episode_return"]),
            termination=Termination(data["termination"]),
        )


class GraderLike(Protocol):
    def grade(self, texts: Sequence[str]) -> list[RatingDistribution]: ...


PolicyFn = Callable[[ResponseState, np.random.Generator], RevisionAction]


def run_episode(
    seed_response: str,
    policy: PolicyFn,
    grader: GraderLike,
    phrases: Sequence[str],
    limits: EpisodeLimits,
    reward_spec: RewardSpec,
    rng: np.random.Generator,
    *,
    experiment_id: int = 0,
    run_id: int = 0,
    episode_index: int = 0,
) -> EpisodeRecord:
    """Revise one seed response until the rating threshold or the step cap.

    The seed is graded once to establish the baseline; each step's reward
    uses the previous step's distribution as "old". At least one action
    is always taken. Grader failures propagate; no partial record is kept.
    """
    text = normalize_whitespace(seed_response)
    if not text:
        raise ValueError("seed response is empty after whitespace normalization")

    state = ResponseState(text=text, steps_taken=0)
    current = grader.grade([state.text])[0]

    transitions: list[Transition] = []
    while True:
        action = policy(state, rng)
        state = apply_action(state, action, phrases)
        new_rating = grader.grade([state.text])[0]
        reward = step_reward(current, new_rating, reward_spec)
        transitions.append(
            Transition(text=state.text, action=action, rating=new_rating, reward=reward)
        )
        current = new_rating
        if expected_rating(current) >= limits.rating_threshold:
            termination = Termination.THRESHOLD_REACHED
            break
        if state.steps_taken >= limits.max_steps:
            termination = Termination.MAX_STEPS
            break

    return EpisodeRecord(
        experiment_id=experiment_id,
        run_id=run_id,
        episode_index=episode_index,
        initial_text=text,
        transitions=tuple(transitions),
        episode_return=float(sum(t.reward for t in transitions)),
        termination=termination,
    )
