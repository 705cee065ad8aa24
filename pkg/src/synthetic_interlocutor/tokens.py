"""Internal budgeting tokenizer.

This tokenizer only meters chunk sizes; the embedding model's own tokenizer
lives behind the wire and is never consulted during ingestion. A token is
either a maximal run of word characters or a single non-word, non-space
character, so counts are deterministic and platform-stable.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def token_spans(text: str) -> list[tuple[int, int]]:
    """Return [start, end) character spans of every token in text, in order."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def count_tokens(text: str) -> int:
    """Count word runs plus standalone punctuation marks.

    "Hello, world!" counts 4 (Hello , world !); hyphenated compounds count
    each part and each hyphen.
    """
    return sum(1 for _ in _TOKEN_RE.finditer(text))
