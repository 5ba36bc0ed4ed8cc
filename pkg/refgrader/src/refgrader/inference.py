"""Deterministic batch inference: texts to 5-class probability rows."""

from __future__ import annotations

import torch

from .bundle import GraderModelBundle
from .protocol import validate_request_texts


def grade_texts(bundle: GraderModelBundle, texts: list[str], batch_size: int = 32) -> list[list[float]]:
    """Softmax class probabilities per text, classes 0..4 = ratings 1..5.

    Runs in eval mode under no_grad, so identical texts always produce
    identical distributions.
    """
    validate_request_texts(texts)
    bundle.model.eval()
    rows: list[list[float]] = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            chunk = texts[start : start + batch_size]
            encoded = bundle.tokenizer(
                chunk,
                padding=True,
                truncation=True,
                max_length=bundle.max_length,
                return_tensors="pt",
            )
            logits = bundle.model(**encoded).logits
            probs = torch.softmax(logits.double(), dim=-1)
            # exact unit sums on the wire
            probs = probs / probs.sum(dim=-1, keepdim=True)
            rows.extend(probs.tolist())
    return rows
