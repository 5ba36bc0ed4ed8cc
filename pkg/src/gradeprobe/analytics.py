"""Episode-log persistence and exploit analytics over top-return episodes.

Logs are JSON Lines with a schema-versioned header line, one file per
(experiment, run). Analytics pool episodes across runs, mine the
top-return subset, and compute the repeat/delete/frequency statistics
plus the smoothed learning curve with a 95% confidence band.
"""

from __future__ import annotations

import glob as globmod
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .env import (
    ActionKind,
    EpisodeRecord,
    InsertLocation,
    ResponseState,
    RevisionAction,
    segment_bounds,
)
from .errors import GradeProbeError
from .presets import ExperimentPreset

LOG_SCHEMA = "gradeprobe/episode-log"
LOG_VERSION = 1
REPORT_SCHEMA = "gradeprobe/audit-report"
REPORT_VERSION = 1

CONFIDENCE_Z = 1.96


def canonical_json(obj: object) -> str:
    """Compact, key-sorted JSON; floats use shortest round-trip decimals."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class EpisodeLogWriter:
    """Append-only JSONL writer for one (experiment, run) log file."""

    def __init__(self, path: str | Path, experiment_id: int, run_id: int):
        self.path = Path(path)
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        header = {
            "schema": LOG_SCHEMA,
            "version": LOG_VERSION,
            "experiment_id": experiment_id,
            "run_id": run_id,
        }
        self._fh.write(canonical_json(header) + "\n")

    def append(self, record: EpisodeRecord) -> None:
        self._fh.write(canonical_json(record.to_dict()) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EpisodeLogWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_episode_log(path: str | Path) -> tuple[dict, list[EpisodeRecord]]:
    """Parse one log file into its header and ordered records."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line]
    if not lines:
        raise GradeProbeError(f"{path}: empty log file")
    header = json.loads(lines[0])
    if header.get("schema") != LOG_SCHEMA:
        raise GradeProbeError(f"{path}: unexpected schema {header.get('schema')!r}")
    if header.get("version") != LOG_VERSION:
        raise GradeProbeError(f"{path}: unsupported log version {header.get('version')!r}")
    records = [EpisodeRecord.from_dict(json.loads(line)) for line in lines[1:]]
    for prev, cur in zip(records, records[1:]):
        if cur.episode_index <= prev.episode_index:
            raise GradeProbeError(f"{path}: episode_index not strictly increasing")
    return header, records


def expand_log_glob(pattern: str) -> list[Path]:
    paths = sorted(Path(p) for p in globmod.glob(pattern))
    if not paths:
        raise GradeProbeError(f"no logs matched {pattern!r}")
    return paths


def subset_size(n_episodes: int, fraction: float) -> int:
    """ceil(fraction * N) computed exactly from the fraction's decimal form."""
    frac = Fraction(repr(float(fraction)))
    if not 0 < frac <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if n_episodes == 0:
        return 0
    return int(math.ceil(frac * n_episodes))


def top_percentile(episodes: Sequence[EpisodeRecord], fraction: float) -> list[EpisodeRecord]:
    """The ceil(fraction*N) highest-return episodes, pooled across runs.

    Ties break by (run_id, episode_index) ascending so the subset is
    deterministic.
    """
    k = subset_size(len(episodes), fraction)
    ordered = sorted(episodes, key=lambda e: (-e.episode_return, e.run_id, e.episode_index))
    return ordered[:k]


def _insert_phrase_indices(episode: EpisodeRecord) -> list[int]:
    return [
        t.action.phrase_index
        for t in episode.transitions
        if t.action.kind is ActionKind.INSERT
    ]


def repeat_stats(subset: Sequence[EpisodeRecord]) -> tuple[float, float]:
    """(repeat fraction, triple-consecutive fraction) over the subset.

    A sequence counts as repeated when some phrase is inserted at least
    twice anywhere (locations and intervening deletes are ignored); the
    triple statistic requires the same phrase on three consecutive
    actions.
    """
    if not subset:
        return 0.0, 0.0
    repeated = 0
    triple = 0
    for episode in subset:
        inserts = _insert_phrase_indices(episode)
        if len(inserts) != len(set(inserts)):
            repeated += 1
        actions = [t.action for t in episode.transitions]
        for i in range(len(actions) - 2):
            window = actions[i : i + 3]
            if all(a.kind is ActionKind.INSERT for a in window) and (
                window[0].phrase_index == window[1].phrase_index == window[2].phrase_index
            ):
                triple += 1
                break
    return repeated / len(subset), triple / len(subset)


def action_label(action: RevisionAction, phrases: Sequence[str]) -> str:
    if action.kind is ActionKind.INSERT:
        side = "front" if action.location is InsertLocation.FRONT else "end"
        return f"insert_{side}:{phrases[action.phrase_index]}"
    return f"delete:{action.segment_index}"


def action_frequency(
    subset: Sequence[EpisodeRecord], phrases: Sequence[str]
) -> tuple[dict[str, float], float, float]:
    """(per-action fractions, delete-sequence fraction, mean actions)."""
    if not subset:
        return {}, 0.0, 0.0
    counts: dict[str, int] = {}
    total_actions = 0
    delete_sequences = 0
    for episode in subset:
        saw_delete = False
        for transition in episode.transitions:
            label = action_label(transition.action, phrases)
            counts[label] = counts.get(label, 0) + 1
            total_actions += 1
            if transition.action.kind is ActionKind.DELETE:
                saw_delete = True
        if saw_delete:
            delete_sequences += 1
    frequency = {label: count / total_actions for label, count in counts.items()}
    return frequency, delete_sequences / len(subset), total_actions / len(subset)


def inventory_split(
    subset: Sequence[EpisodeRecord], preset: ExperimentPreset
) -> tuple[float, float] | None:
    """(helpful, unhelpful) fractions over insert actions; None if
    the preset has no partition or the subset has no inserts."""
    if preset.helpful_indices is None:
        return None
    helpful = 0
    total = 0
    for episode in subset:
        for index in _insert_phrase_indices(episode):
            total += 1
            if index in preset.helpful_indices:
                helpful += 1
    if total == 0:
        return None
    return helpful / total, (total - helpful) / total


@dataclass
class AuditReport:
    """Exploit metrics over the mined top-return subset."""

    experiment_id: int
    n_episodes_total: int
    n_episodes_analyzed: int
    top_fraction: float
    mean_actions: float
    delete_sequence_fraction: float
    repeat_sequence_fraction: float
    triple_consecutive_fraction: float
    per_action_frequency: dict[str, float]
    helpful_vs_unhelpful_split: tuple[float, float] | None
    exemplar_sequences: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        split = (
            None
            if self.helpful_vs_unhelpful_split is None
            else {
                "helpful": self.helpful_vs_unhelpful_split[0],
                "unhelpful": self.helpful_vs_unhelpful_split[1],
            }
        )
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_VERSION,
            "experiment_id": self.experiment_id,
            "n_episodes_total": self.n_episodes_total,
            "n_episodes_analyzed": self.n_episodes_analyzed,
            "top_fraction": self.top_fraction,
            "mean_actions": self.mean_actions,
            "delete_sequence_fraction": self.delete_sequence_fraction,
            "repeat_sequence_fraction": self.repeat_sequence_fraction,
            "triple_consecutive_fraction": self.triple_consecutive_fraction,
            "per_action_frequency": self.per_action_frequency,
            "helpful_vs_unhelpful_split": split,
            "exemplar_sequences": self.exemplar_sequences,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditReport":
        split = data["helpful_vs_unhelpful_split"]
        return cls(
            experiment_id=data["experiment_id"],
            n_episodes_total=data["n_episodes_total"],
            n_episodes_analyzed=data["n_episodes_analyzed"],
            top_fraction=data["top_fraction"],
            mean_actions=data["mean_actions"],
            delete_sequence_fraction=data["delete_sequence_fraction"],
            repeat_sequence_fraction=data["repeat_sequence_fraction"],
            triple_consecutive_fraction=data["triple_consecutive_fraction"],
            per_action_frequency=dict(data["per_action_frequency"]),
            helpful_vs_unhelpful_split=(
                None if split is None else (split["helpful"], split["unhelpful"])
            ),
            exemplar_sequences=list(data["exemplar_sequences"]),
        )


class EpisodeRenderer:
    """Replays an episode for display: inserted phrases are bracketed at
    their insertion position, deleted tokens stay visible struck out."""

    def __init__(self, initial_text: str):
        # Flat token list; group is None for original tokens, else an
        # insertion id so one inserted phrase renders as a single [...]."
        self._tokens: list[dict] = [
            {"text": tok, "group": None, "deleted": False} for tok in initial_text.split()
        ]
        self._next_group = 0

    def _live_positions(self) -> list[int]:
        return [i for i, tok in enumerate(self._tokens) if not tok["deleted"]]

    def live_text(self) -> str:
        return " ".join(self._tokens[i]["text"] for i in self._live_positions())

    def apply(self, action: RevisionAction, phrases: Sequence[str]) -> None:
        if action.kind is ActionKind.INSERT:
            group = self._next_group
            self._next_group += 1
            inserted = [
                {"text": tok, "group": group, "deleted": False}
                for tok in phrases[action.phrase_index].split()
            ]
            if action.location is InsertLocation.FRONT:
                self._tokens = inserted + self._tokens
            else:
                self._tokens = self._tokens + inserted
        else:
            live = self._live_positions()
            state = ResponseState(text=" ".join(self._tokens[i]["text"] for i in live))
            start, end = segment_bounds(state)[action.segment_index]
            for pos in live[start:end]:
                self._tokens[pos]["deleted"] = True

    def rendered(self) -> str:
        parts: list[str] = []
        i = 0
        tokens = self._tokens
        while i < len(tokens):
            group = tokens[i]["group"]
            j = i
            while j < len(tokens) and tokens[j]["group"] == group:
                j += 1
            chunk = self._render_span(tokens[i:j])
            if group is not None:
                chunk = f"[{chunk}]"
            parts.append(chunk)
            i = j
        return " ".join(parts)

    @staticmethod
    def _render_span(span: list[dict]) -> str:
        pieces: list[str] = []
        i = 0
        while i < len(span):
            deleted = span[i]["deleted"]
            j = i
            while j < len(span) and span[j]["deleted"] == deleted:
                j += 1
            words = " ".join(tok["text"] for tok in span[i:j])
            pieces.append(f"~~{words}~~" if deleted else words)
            i = j
        return " ".join(pieces)


def render_episode(episode: EpisodeRecord, phrases: Sequence[str]) -> str:
    renderer = EpisodeRenderer(episode.initial_text)
    for transition in episode.transitions:
        renderer.apply(transition.action, phrases)
    return renderer.rendered()


def build_report(
    episodes: Sequence[EpisodeRecord],
    preset: ExperimentPreset,
    top_fraction: float = 0.05,
    max_exemplars: int = 5,
) -> AuditReport:
    """Mine the top-return subset and assemble the audit report."""
    subset = top_percentile(episodes, top_fraction) if episodes else []
    repeat_fraction, triple_fraction = repeat_stats(subset)
    frequency, delete_fraction, mean_actions = action_frequency(subset, preset.phrases)
    exemplars = [
        {
            "run_id": e.run_id,
            "episode_index": e.episode_index,
            "episode_return": e.episode_return,
            "n_actions": len(e.transitions),
            "rendered": render_episode(e, preset.phrases),
        }
        for e in subset[:max_exemplars]
    ]
    return AuditReport(
        experiment_id=preset.id,
        n_episodes_total=len(episodes),
        n_episodes_analyzed=len(subset),
        top_fraction=top_fraction,
        mean_actions=mean_actions,
        delete_sequence_fraction=delete_fraction,
        repeat_sequence_fraction=repeat_fraction,
        triple_consecutive_fraction=triple_fraction,
        per_action_frequency=frequency,
        helpful_vs_unhelpful_split=inventory_split(subset, preset),
        exemplar_sequences=exemplars,
    )


@dataclass
class LearningCurve:
    """Per-index smoothed mean return across runs with a 95% band."""

    window: int
    episodes_per_run: int
    n_runs: int
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    degenerate_band: bool = False


def rolling_mean(values: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean of `window` values; early indices average the prefix."""
    x = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return x.copy()
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(0, idx - window)
    return (csum[idx] - csum[lo]) / (idx - lo)


def learning_curve(
    run_returns: Sequence[Sequence[float]], window: int, episodes_per_run: int
) -> LearningCurve:
    """Smooth each run, then average across runs with a 1.96*sd/sqrt(R) band.

    Every run must supply at least episodes_per_run episodes; extra
    episodes are ignored. With a single run the band collapses to the
    mean and is flagged degenerate.
    """
    if not run_returns:
        raise ValueError("no runs supplied")
    if episodes_per_run < 1:
        raise ValueError("episodes_per_run must be >= 1")
    for i, returns in enumerate(run_returns):
        if len(returns) < episodes_per_run:
            raise ValueError(
                f"run {i} has {len(returns)} episodes, needs >= {episodes_per_run}"
            )
    smoothed = np.vstack(
        [rolling_mean(list(r)[:episodes_per_run], window) for r in run_returns]
    )
    n_runs = smoothed.shape[0]
    mean = smoothed.mean(axis=0)
    if n_runs < 2:
        return LearningCurve(
            window=window,
            episodes_per_run=episodes_per_run,
            n_runs=n_runs,
            mean=mean,
            lower=mean.copy(),
            upper=mean.copy(),
            degenerate_band=True,
        )
    sd = smoothed.std(axis=0, ddof=0)
    half = CONFIDENCE_Z * sd / math.sqrt(n_runs)
    return LearningCurve(
        window=window,
        episodes_per_run=episodes_per_run,
        n_runs=n_runs,
        mean=mean,
        lower=mean - half,
        upper=mean + half,
    )


def write_report(report: AuditReport, path: str | Path) -> None:
    Path(path).write_text(canonical_json(report.to_dict()) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> AuditReport:
    return AuditReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_curve_csv(curve: LearningCurve, path: str | Path) -> None:
    """CSV with header episode_index,mean,lower,upper; shortest decimals."""
    lines = ["episode_index,mean,lower,upper"]
    for i in range(len(curve.mean)):
        lines.append(
            f"{i},{float(curve.mean[i])!r},{float(curve.lower[i])!r},{float(curve.upper[i])!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
