"""Document segmentation into retrievable chunks.

Two strategies:

* ``token_window`` slides a window of ``max_chunk_tokens`` over the token
  stream with ``overlap_tokens`` of overlap, so consecutive chunks share
  exactly that many tokens. For a document of N tokens (N > overlap) this
  yields ceil((N - overlap) / (max - overlap)) chunks.
* ``speaker_turn`` greedily merges consecutive turns until the next turn
  would not fit; a single turn larger than the budget falls back to
  token-window segmentation inside that turn.

A trailing chunk smaller than ``min_chunk_tokens`` is merged into its
predecessor when the two are span-contiguous; the merged chunk may then
exceed ``max_chunk_tokens`` by at most ``min_chunk_tokens - 1`` tokens.
(In token-window mode the tail always carries more than ``overlap_tokens``
tokens, so with the default config the merge never fires there.)
"""

from __future__ import annotations

from .documents import Chunk, ChunkingConfig, Document
from .errors import EmptyDocument, InvalidConfig
from .tokens import token_spans


def _make_chunk(doc: Document, ordinal: int, spans: list[tuple[int, int]]) -> Chunk:
    start = spans[0][0]
    end = spans[-1][1]
    return Chunk(
        id=f"{doc.id}#{ordinal}",
        doc_id=doc.id,
        ordinal=ordinal,
        text=doc.text[start:end],
        start=start,
        end=end,
        token_count=len(spans),
    )


def _window_groups(
    spans: list[tuple[int, int]], max_tokens: int, overlap: int
) -> list[list[tuple[int, int]]]:
    """Split a token-span list into overlapping windows.

    Windows start every (max_tokens - overlap) tokens while the start still
    introduces tokens beyond the previous window's overlap. A list of at most
    `overlap` tokens yields a single window.
    """
    n = len(spans)
    if n == 0:
        return []
    stride = max_tokens - overlap
    groups = []
    start = 0
    while True:
        groups.append(spans[start : start + max_tokens])
        start += stride
        if start >= n - overlap:
            break
    return groups


def _merge_trailing_fragment(
    doc: Document, groups: list[list[tuple[int, int]]], cfg: ChunkingConfig
) -> list[Chunk]:
    """Materialize chunks, folding an undersized contiguous tail into its predecessor."""
    if len(groups) >= 2 and len(groups[-1]) < cfg.min_chunk_tokens:
        tail = groups[-1]
        prev = groups[-2]
        # Only merge when the tail starts where the previous group ends
        # (turn groups); overlapping windows would double tokens.
        if tail[0][0] >= prev[-1][1]:
            groups = groups[:-1]
            groups[-1] = prev + tail
    return [_make_chunk(doc, i, g) for i, g in enumerate(groups)]


def chunk_document(doc: Document, cfg: ChunkingConfig) -> list[Chunk]:
    """Segment a document into ordered chunks under the given config."""
    cfg.validate()
    spans = token_spans(doc.text)
    if not spans:
        raise EmptyDocument(f"document {doc.id!r} has no tokens")

    if cfg.strategy == "token_window":
        groups = _window_groups(spans, cfg.max_chunk_tokens, cfg.overlap_tokens)
    elif cfg.strategy == "speaker_turn":
        groups = _speaker_turn_groups(doc, spans, cfg)
    else:
        raise InvalidConfig(f"unknown chunking strategy {cfg.strategy!r}")

    return _merge_trailing_fragment(doc, groups, cfg)


def _speaker_turn_groups(
    doc: Document, spans: list[tuple[int, int]], cfg: ChunkingConfig
) -> list[list[tuple[int, int]]]:
    if not doc.turns:
        # No turn structure recorded: the whole document is one segment,
        # window-split if over budget.
        return _window_groups(spans, cfg.max_chunk_tokens, cfg.overlap_tokens)

    # Partition the token stream by turn span. Tokens outside any turn
    # (defensive; the transcript grammar leaves only whitespace between
    # turns) attach to the nearest following turn.
    per_turn: list[list[tuple[int, int]]] = [[] for _ in doc.turns]
    ti = 0
    for span in spans:
        while ti < len(doc.turns) - 1 and span[0] >= doc.turns[ti + 1].start:
            ti += 1
        per_turn[ti].append(span)

    groups: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []
    for turn_spans in per_turn:
        if not turn_spans:
            continue
        if len(turn_spans) > cfg.max_chunk_tokens:
            # Oversized single turn: flush and window-split it.
            if current:
                groups.append(current)
                current = []
            groups.extend(
                _window_groups(turn_spans, cfg.max_chunk_tokens, cfg.overlap_tokens)
            )
            continue
        if current and len(current) + len(turn_spans) > cfg.max_chunk_tokens:
            groups.append(current)
            current = []
        current.extend(turn_spans)
    if current:
        groups.append(current)
    return groups


def expected_window_chunk_count(n_tokens: int, cfg: ChunkingConfig) -> int:
    """Closed-form chunk count for token_window when n_tokens > overlap."""
    stride = cfg.max_chunk_tokens - cfg.overlap_tokens
    return max(1, -(-(n_tokens - cfg.overlap_tokens) // stride))
