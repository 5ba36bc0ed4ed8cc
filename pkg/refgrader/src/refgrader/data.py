"""Labeled response sets: CSV loading, splitting, and a synthetic generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import RATING_MAX, RATING_MIN

MIN_ROWS = 50
SPLIT_FRACTIONS = (0.70, 0.15, 0.15)


@dataclass
class LabeledResponseSet:
    texts: list[str]
    labels: list[int]  # display ratings 1..5

    def __len__(self) -> int:
        return len(self.texts)


def load_csv(path: str | Path) -> LabeledResponseSet:
    """Read a `text,label` CSV; labels must be integers 1..5."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["text", "label"]:
            raise ValueError(f"{path}: header must be exactly 'text,label'")
        texts, labels = [], []
        for row_number, row in enumerate(reader, start=2):
            text = (row["text"] or "").strip()
            if not text:
                raise ValueError(f"{path}:{row_number}: empty text")
            try:
                label = int(row["label"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{row_number}: label is not an integer") from exc
            if not RATING_MIN <= label <= RATING_MAX:
                raise ValueError(f"{path}:{row_number}: label {label} outside 1..5")
            texts.append(text)
            labels.append(label)
    return LabeledResponseSet(texts=texts, labels=labels)


def split_dataset(
    dataset: LabeledResponseSet, seed: int
) -> tuple[LabeledResponseSet, LabeledResponseSet, LabeledResponseSet]:
    """Disjoint, exhaustive 70/15/15 split after a seeded shuffle."""
    n = len(dataset)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(SPLIT_FRACTIONS[0] * n)
    n_val = int(SPLIT_FRACTIONS[1] * n)

    def take(indices) -> LabeledResponseSet:
        return LabeledResponseSet(
            texts=[dataset.texts[i] for i in indices],
            labels=[dataset.labels[i] for i in indices],
        )

    return (
        take(order[:n_train]),
        take(order[n_train : n_train + n_val]),
        take(order[n_train + n_val :]),
    )


# --- synthetic data -------------------------------------------------------
# Rule-based responses for the tapped-glass pitch question: higher ratings
# stack more of the key ideas, lower ratings stay vague or wrong.

_IDEAS = (
    "water is more dense than air",
    "the pitch is lower in the full glass",
    "sound travels slower in water",
    "there is less vibration in the full glass",
    "the empty glass has a higher pitch",
    "the frequency is higher in the empty glass",
)
_VAGUE = (
    "it makes a different sound",
    "the glass makes a noise when you tap it",
    "i think they sound different",
    "maybe the water changes it",
    "you can hear a ring",
    "it depends on the glass",
)
_WRONG = (
    "the pitch is the same in both",
    "sound is more dense in the glass",
    "the water makes the pitch higher",
    "amplitude is the number of waves",
)
_FILLER = ("i think", "maybe", "really", "so", "because of that")


def make_synthetic_dataset(n_rows: int, seed: int = 0) -> LabeledResponseSet:
    """Deterministic labeled rows that loosely tie rating to idea count."""
    rng = np.random.default_rng(seed)
    texts, labels = [], []
    for _ in range(n_rows):
        label = int(rng.integers(RATING_MIN, RATING_MAX + 1))
        n_ideas = max(0, label - 2)
        parts = list(rng.choice(_IDEAS, size=n_ideas, replace=False)) if n_ideas else []
        if label <= 2:
            parts.append(str(rng.choice(_VAGUE)))
        if label == 1 and rng.random() < 0.6:
            parts.append(str(rng.choice(_WRONG)))
        if rng.random() < 0.4:
            parts.insert(0, str(rng.choice(_FILLER)))
        rng.shuffle(parts)
        texts.append(" ".join(parts))
        labels.append(label)
    return LabeledResponseSet(texts=texts, labels=labels)


def write_csv(dataset: LabeledResponseSet, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["text", "label"])
        for text, label in zip(dataset.texts, dataset.labels):
            writer.writerow([text, label])
