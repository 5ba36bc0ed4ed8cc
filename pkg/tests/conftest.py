"""Shared fixtures: stub graders and the handcrafted analytics log."""

from __future__ import annotations

import numpy as np
import pytest

from gradeprobe.env import (
    EpisodeRecord,
    InsertLocation,
    RatingDistribution,
    RevisionAction,
    Termination,
    Transition,
)

UNIFORM = RatingDistribution.from_probs([0.2, 0.2, 0.2, 0.2, 0.2])


class ConstantGrader:
    """Always returns the same distribution; expected rating 2.0."""

    model_id = "stub-constant"

    def __init__(self, dist: RatingDistribution = UNIFORM):
        self.dist = dist
        self.calls = 0

    def grade(self, texts):
        self.calls += 1
        return [self.dist for _ in texts]


class OneStepJumpGrader:
    """Low rating on the baseline call, high rating on every later call."""

    model_id = "stub-jump"

    def __init__(self):
        self.calls = 0
        self.low = RatingDistribution.from_probs([0.8, 0.2, 0.0, 0.0, 0.0])  # E = 0.2
        self.high = RatingDistribution.from_probs([0.0, 0.0, 0.0, 0.2, 0.8])  # E = 3.8

    def grade(self, texts):
        self.calls += 1
        return [self.low if self.calls == 1 else self.high for _ in texts]


def insert(phrase_index: int, location: str) -> RevisionAction:
    return RevisionAction.insert(phrase_index, InsertLocation(location))


def delete(segment_index: int) -> RevisionAction:
    return RevisionAction.delete(segment_index)


def make_episode(
    actions,
    episode_return: float,
    *,
    run_id: int = 0,
    episode_index: int = 0,
    experiment_id: int = 1,
    initial_text: str = "i dont know",
    termination: Termination = Termination.THRESHOLD_REACHED,
) -> EpisodeRecord:
    """Build a record with the given actions; rewards split the return so
    the sum invariant holds exactly."""
    n = len(actions)
    rewards = [0.0] * (n - 1) + [float(episode_return)]
    transitions = tuple(
        Transition(text=initial_text, action=a, rating=UNIFORM, reward=r)
        for a, r in zip(actions, rewards)
    )
    return EpisodeRecord(
        experiment_id=experiment_id,
        run_id=run_id,
        episode_index=episode_index,
        initial_text=initial_text,
        transitions=transitions,
        episode_return=float(episode_return),
        termination=termination,
    )


# Twenty handcrafted episodes against preset 1. Episodes 0-4 contain a
# repeated phrase insertion (episode 2 is the lone triple); episodes
# 1, 7, 10, 16, 19 contain a delete. Returns strictly decrease so the
# top-k cut is unambiguous.
HANDCRAFTED_SPEC = [
    ([insert(3, "front"), insert(3, "end")], 9.0),
    ([insert(1, "front"), delete(2), insert(1, "end")], 8.5),
    ([insert(0, "front"), insert(0, "end"), insert(0, "front")], 8.0),
    ([insert(5, "end"), insert(5, "end")], 7.5),
    ([insert(2, "front"), insert(4, "end"), insert(2, "front")], 7.0),
    ([insert(6, "end")], 6.5),
    ([insert(7, "front"), insert(8, "end")], 6.0),
    ([delete(0), insert(9, "end")], 5.5),
    ([insert(0, "end"), insert(1, "end")], 5.0),
    ([insert(2, "end")], 4.5),
    ([insert(3, "end"), delete(4)], 4.0),
    ([insert(4, "front")], 3.5),
    ([insert(5, "front"), insert(6, "end")], 3.0),
    ([insert(7, "end")], 2.5),
    ([insert(8, "front"), insert(9, "front")], 2.0),
    ([insert(0, "front")], 1.5),
    ([delete(1)], 1.0),
    ([insert(1, "front"), insert(2, "end")], 0.5),
    ([insert(3, "front")], 0.25),
    ([insert(4, "end"), delete(3), insert(5, "front")], 0.1),
]


@pytest.fixture
def handcrafted_log() -> list[EpisodeRecord]:
    return [
        make_episode(actions, ret, episode_index=i)
        for i, (actions, ret) in enumerate(HANDCRAFTED_SPEC)
    ]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
