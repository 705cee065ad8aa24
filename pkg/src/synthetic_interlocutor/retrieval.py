"""Query building, top-k lookup, and context assembly for one turn."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import InvalidConfig
from .vectorstore import Index, RetrievalHit


@dataclass
class RetrievalConfig:
    k: int = 1
    min_score: float = -1.0  # -1.0 keeps everything
    context_separator: str = "\n---\n"
    query_mode: str = "last_message_only"  # or "last_message_plus_history_window"
    history_window_turns: int = 0

    def validate(self) -> None:
        if self.k < 1:
            raise InvalidConfig("retrieval k must be >= 1")
        if self.history_window_turns < 0:
            raise InvalidConfig("history_window_turns must be >= 0")
        if self.query_mode not in (
            "last_message_only",
            "last_message_plus_history_window",
        ):
            raise InvalidConfig(f"unknown query_mode {self.query_mode!r}")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "min_score": self.min_score,
            "context_separator": self.context_separator,
            "query_mode": self.query_mode,
            "history_window_turns": self.history_window_turns,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RetrievalConfig":
        cfg = cls(**obj)
        cfg.validate()
        return cfg


@dataclass
class RetrievedContext:
    hits: list[RetrievalHit]
    context_text: str
    query_text: str


def build_query_text(
    question: str, history_texts: list[str], cfg: RetrievalConfig
) -> str:
    if cfg.query_mode == "last_message_only" or cfg.history_window_turns == 0:
        return question
    window = history_texts[-cfg.history_window_turns :]
    return "\n".join([*window, question])


def retrieve(
    question: str,
    history_texts: list[str],
    index: Index,
    embedder,
    cfg: RetrievalConfig,
    chunk_text: Callable[[str], str],
) -> RetrievedContext:
    """Embed the query, fetch top-k, and join the hit texts in rank order.

    `history_texts` holds prior turn texts (both roles, oldest first); only
    the window mode reads them. An empty index yields an empty context, not
    an error.
    """
    if not question:
        raise InvalidConfig("question must be non-empty")
    cfg.validate()
    query_text = build_query_text(question, history_texts, cfg)
    if len(index) == 0:
        return RetrievedContext(hits=[], context_text="", query_text=query_text)
    qvec = embedder.embed_batch([query_text])[0]
    hits = index.query(qvec, cfg.k)
    hits = [h for h in hits if h.score >= cfg.min_score]
    hits = [
        RetrievalHit(chunk_id=h.chunk_id, score=h.score, rank=i)
        for i, h in enumerate(hits)
    ]
    context_text = cfg.context_separator.join(chunk_text(h.chunk_id) for h in hits)
    return RetrievedContext(hits=hits, context_text=context_text, query_text=query_text)
