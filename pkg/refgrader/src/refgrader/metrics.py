"""Agreement metrics for ordinal ratings: quadratic weighted kappa and AUC."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.metrics import roc_auc_score

RATING_MIN = 1
RATING_MAX = 5
_K = RATING_MAX - RATING_MIN + 1


def qwk(labels: Sequence[int], predictions: Sequence[int]) -> float:
    """Quadratic weighted kappa over ratings 1..5.

    1 - sum(w*O) / sum(w*E) with w_ij = (i-j)^2 / 16, O the observed
    confusion counts and E the outer product of the marginals. Perfect
    agreement gives 1.0; a balanced full reversal gives -1.0.
    """
    labels = list(labels)
    predictions = list(predictions)
    if not labels:
        raise ValueError("empty input")
    if len(labels) != len(predictions):
        raise ValueError(f"{len(labels)} labels vs {len(predictions)} predictions")
    for value in (*labels, *predictions):
        if not RATING_MIN <= value <= RATING_MAX:
            raise ValueError(f"rating {value!r} outside {RATING_MIN}..{RATING_MAX}")

    n = len(labels)
    observed = np.zeros((_K, _K))
    for lab, pred in zip(labels, predictions):
        observed[lab - RATING_MIN, pred - RATING_MIN] += 1
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    i = np.arange(_K)
    weights = (i[:, None] - i[None, :]) ** 2 / (_K - 1) ** 2

    weighted_observed = float((weights * observed).sum())
    weighted_expected = float((weights * expected).sum())
    if weighted_expected == 0.0:
        # both marginals are a single identical class: perfect agreement
        return 1.0
    return 1.0 - weighted_observed / weighted_expected


def one_vs_rest_auc(labels: Sequence[int], probabilities: np.ndarray) -> float | None:
    """Macro one-vs-rest ROC AUC over the rating classes present in labels.

    Classes without both a positive and a negative example are skipped;
    returns None when no class is scoreable.
    """
    labels = np.asarray(list(labels))
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if probabilities.shape != (len(labels), _K):
        raise ValueError(f"probabilities must be shaped ({len(labels)}, {_K})")
    scores = []
    for k in range(_K):
        positives = labels == k + RATING_MIN
        if positives.any() and (~positives).any():
            scores.append(roc_auc_score(positives.astype(int), probabilities[:, k]))
    return float(np.mean(scores)) if scores else None
