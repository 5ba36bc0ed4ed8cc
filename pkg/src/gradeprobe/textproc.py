"""Shared text handling: whitespace tokens, scoring normalization, phrase counts.

Two tokenizations coexist on purpose. The environment edits raw
whitespace tokens (``str.split``), while every scoring or feature count
first lowercases and strips edge punctuation so that "Dense." and
"dense" match the same inventory entry.
"""

from __future__ import annotations

EDGE_PUNCTUATION = ".,!?;:"


def normalize_whitespace(text: str) -> str:
    """Collapse all whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


def scoring_tokens(text: str) -> list[str]:
    """Lowercase tokens with edge punctuation stripped; empties dropped."""
    out = []
    for tok in text.lower().split():
        tok = tok.strip(EDGE_PUNCTUATION)
        if tok:
            out.append(tok)
    return out


def count_phrase(tokens: list[str], phrase_tokens: list[str]) -> int:
    """Non-overlapping occurrences of a token sequence, scanned left to right."""
    n, m = len(tokens), len(phrase_tokens)
    if m == 0 or n < m:
        return 0
    count = 0
    i = 0
    while i <= n - m:
        if tokens[i : i + m] == phrase_tokens:
            count += 1
            i += m
        else:
            i += 1
    return count


def count_ngram(tokens: list[str], ngram_tokens: list[str]) -> int:
    """Occurrences of a token n-gram at every position (sliding window)."""
    n, m = len(tokens), len(ngram_tokens)
    if m == 0 or n < m:
        return 0
    return sum(1 for i in range(n - m + 1) if tokens[i : i + m] == ngram_tokens)
