"""Token accounting and lossless sentence segmentation.

The whole stack measures text in deterministic pseudo-tokens: one token per
four characters, rounded up. This keeps every budget computation exact and
platform-independent (no external tokenizer).
"""

from __future__ import annotations

import re

CHARS_PER_TOKEN = 4

_WORD_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_END_RE = re.compile(r"[.!?]+(?:\s+|$)")


def count_tokens(text: str) -> int:
    """ceil(len(text) / 4); zero for empty text, monotone in length."""
    return -(-len(text) // CHARS_PER_TOKEN)


def word_tokens(text: str) -> list[str]:
    """Lowercase alphanumeric word tokens used by the embedder."""
    return _WORD_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split into sentence pieces whose concatenation is exactly ``text``.

    A piece runs through its terminating punctuation and any whitespace that
    follows it, so nothing is lost or normalized. Trailing text without a
    terminator forms the final piece.
    """
    if not text:
        return []
    pieces = []
    start = 0
    for m in _SENTENCE_END_RE.finditer(text):
        pieces.append(text[start:m.end()])
        start = m.end()
    if start < len(text):
        pieces.append(text[start:])
    return pieces
