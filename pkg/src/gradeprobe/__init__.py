"""Adversarial auditing toolkit for automatic short-answer graders.

A policy-gradient agent revises seed responses until a grading model
awards a high expected rating; the episode logs are then mined for
exploit patterns such as phrase stuffing and distractor-terminology
credit.
"""

__version__ = "0.1.0"

from .env import (
    EpisodeLimits,
    EpisodeRecord,
    RatingDistribution,
    ResponseState,
    RevisionAction,
    RewardSpec,
    Termination,
    action_from_index,
    action_space_size,
    action_to_index,
    apply_action,
    expected_rating,
    run_episode,
    segment_bounds,
    step_reward,
)
from .errors import (
    ConfigValidationError,
    GradeProbeError,
    GraderInputError,
    GraderTransportError,
    InvalidActionError,
    TrainingError,
)
from .grader import (
    CachingGrader,
    GraderBinding,
    MockGrader,
    MockRubricConfig,
    RemoteGrader,
    build_grader,
    cache_lookup_or_grade,
    mock_distribution,
    mock_raw_score,
)
from .policy import (
    FeaturizerConfig,
    PolicyParameters,
    action_distribution,
    default_featurizer,
    featurize,
    greedy_action,
    init_params,
    load_policy,
    sample_action,
    save_policy,
)
from .ppo import (
    PpoConfig,
    TrainDeps,
    TrainRunConfig,
    ppo_update,
    returns_to_go,
    train_run,
)
from .analytics import (
    AuditReport,
    EpisodeLogWriter,
    LearningCurve,
    action_frequency,
    build_report,
    inventory_split,
    learning_curve,
    read_episode_log,
    render_episode,
    repeat_stats,
    top_percentile,
)
from .presets import ExperimentPreset, get_preset
