"""Experiment presets: the phrase inventories the revision agent may insert.

Preset 1 holds the ten rubric-aligned key phrases, preset 2 the ten
distractor phrases that carry topical vocabulary without substance, and
preset 3 their union with the helpful/unhelpful partition preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigValidationError

HELPFUL_PHRASES: tuple[str, ...] = (
    "sound moves faster in air",
    "sound moves slower in water",
    "water is more dense",
    "water has more mass",
    "higher frequency in air",
    "pitch is lower in water",
    "pitch higher in empty glass",
    "air is less dense",
    "less vibration in water",
    "the pitch is different",
)

UNHELPFUL_PHRASES: tuple[str, ...] = (
    "i am not sure",
    "tapping the glass",
    "sound bounces in the glass",
    "sound sinks in water",
    "sound will echo in glass",
    "the pitch is the same",
    "water blocks the sound",
    "frequency is height of wave",
    "amplitude is number of waves",
    "sound is more dense",
)

PRESET_IDS = (1, 2, 3)


@dataclass(frozen=True)
class ExperimentPreset:
    """A phrase inventory plus, for mixed inventories, a partition."""

    id: int
    phrases: tuple[str, ...]
    # Indices of phrases labeled helpful; None when the preset has no partition.
    helpful_indices: frozenset[int] | None = None

    @property
    def inventory_size(self) -> int:
        return len(self.phrases)

    def partition_label(self, phrase_index: int) -> str | None:
        if self.helpful_indices is None:
            return None
        return "helpful" if phrase_index in self.helpful_indices else "unhelpful"


def get_preset(preset_id: int) -> ExperimentPreset:
    if preset_id == 1:
        return ExperimentPreset(id=1, phrases=HELPFUL_PHRASES)
    if preset_id == 2:
        return ExperimentPreset(id=2, phrases=UNHELPFUL_PHRASES)
    if preset_id == 3:
        return ExperimentPreset(
            id=3,
            phrases=HELPFUL_PHRASES + UNHELPFUL_PHRASES,
            helpful_indices=frozenset(range(len(HELPFUL_PHRASES))),
        )
    raise ConfigValidationError(f"experiment: must be one of {PRESET_IDS}, got {preset_id!r}")
