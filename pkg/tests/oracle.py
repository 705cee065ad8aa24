"""Independent brute-force oracles used to check the engine's fast paths.

These deliberately re-derive results from first principles (plain loops,
float64 dots, closed-form counts) and never call the code they verify.
"""

from __future__ import annotations

import math

import numpy as np


def brute_force_cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def brute_force_topk(entries, query, k: int) -> list[tuple[str, float]]:
    """O(n*d) scan; ties broken by ascending chunk id."""
    q = np.asarray(query, dtype=np.float64)
    scored = []
    for entry in entries:
        s = float(np.dot(np.asarray(entry.vector, dtype=np.float64), q))
        scored.append((s, entry.chunk_id))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(cid, s) for s, cid in scored[:k]]


def window_chunk_count(n_tokens: int, max_tokens: int, overlap: int) -> int:
    """Closed-form count for the sliding window, valid for n_tokens > overlap."""
    return max(1, math.ceil((n_tokens - overlap) / (max_tokens - overlap)))


def non_whitespace(text: str) -> str:
    return "".join(c for c in text if not c.isspace())


def check_chunk_coverage(doc_text: str, chunks) -> None:
    """Assert the span-coverage invariant directly on character positions.

    Every non-whitespace character must be covered exactly once, except
    characters inside the overlap between two adjacent chunks, which appear
    exactly twice.
    """
    counts = [0] * len(doc_text)
    for ch in chunks:
        assert doc_text[ch.start : ch.end] == ch.text
        for pos in range(ch.start, ch.end):
            counts[pos] += 1

    overlap_positions = set()
    ordered = sorted(chunks, key=lambda c: c.ordinal)
    for prev, nxt in zip(ordered, ordered[1:]):
        assert nxt.start >= prev.start
        for pos in range(nxt.start, min(prev.end, nxt.end)):
            overlap_positions.add(pos)

    for pos, c in enumerate(doc_text):
        if c.isspace():
            continue
        expected = 2 if pos in overlap_positions else 1
        assert counts[pos] == expected, (
            f"position {pos} ({doc_text[pos]!r}) covered {counts[pos]} times, "
            f"expected {expected}"
        )

    # Reassembly: drop each chunk's second copy of the overlap region.
    pieces = []
    prev_end = 0
    for ch in ordered:
        start = max(ch.start, prev_end)
        pieces.append(doc_text[start : ch.end])
        prev_end = max(prev_end, ch.end)
    assert non_whitespace("".join(pieces)) == non_whitespace(doc_text)
