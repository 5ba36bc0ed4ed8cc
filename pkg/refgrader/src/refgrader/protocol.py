"""The grading wire protocol this service implements.

POST /v1/grade with {"texts": [...]} answers
{"model_id": "<string>", "distributions": [[p0..p4], ...]} — five
probabilities per text summing to 1 within 1e-6. Classes 0..4 map to
display ratings 1..5. 400 covers empty lists, oversize texts, and
malformed bodies; 500 covers model failures.
"""

from __future__ import annotations

NUM_CLASSES = 5
MAX_TEXT_CHARS = 10_000
GRADE_PATH = "/v1/grade"
SUM_TOLERANCE = 1e-6


class ProtocolError(ValueError):
    """A request or reply violates the wire contract."""


def validate_request_texts(texts: object) -> list[str]:
    if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
        raise ProtocolError('body must be {"texts": ["...", ...]}')
    if len(texts) == 0:
        raise ProtocolError("texts list is empty")
    for i, text in enumerate(texts):
        if len(text) > MAX_TEXT_CHARS:
            raise ProtocolError(f"texts[{i}] has {len(text)} characters, limit {MAX_TEXT_CHARS}")
    return texts


def validate_reply(payload: object) -> tuple[str, list[list[float]]]:
    if not isinstance(payload, dict):
        raise ProtocolError("reply is not a JSON object")
    model_id = payload.get("model_id")
    distributions = payload.get("distributions")
    if not isinstance(model_id, str):
        raise ProtocolError("reply is missing a string model_id")
    if not isinstance(distributions, list):
        raise ProtocolError("reply is missing a distributions list")
    for i, dist in enumerate(distributions):
        if not isinstance(dist, list) or len(dist) != NUM_CLASSES:
            raise ProtocolError(f"distributions[{i}] does not have {NUM_CLASSES} entries")
        values = [float(p) for p in dist]
        if any(p < 0.0 or p > 1.0 for p in values):
            raise ProtocolError(f"distributions[{i}] has entries outside [0, 1]")
        if abs(sum(values) - 1.0) > SUM_TOLERANCE:
            raise ProtocolError(f"distributions[{i}] sums to {sum(values)!r}, not 1")
    return model_id, [[float(p) for p in d] for d in distributions]
