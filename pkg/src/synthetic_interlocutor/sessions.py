"""Conversation state and its append-only persistence.

Each session lives as ``sessions/{id}.jsonl`` (one ChatTurn per line, never
rewritten) plus a small ``{id}.meta.json`` header with the session's corpus
and per-session parameter overrides.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import SessionNotFound
from .llm import GenerationParams
from .retrieval import RetrievalConfig
from .vectorstore import RetrievalHit

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class GuardVerdict:
    rule: str  # R1_genre | R2_continuation | R3_no_prior_meeting | R4_no_ascription
    triggered: bool
    evidence_text: str | None = None
    evidence_span: tuple[int, int] | None = None
    action_taken: str = "none"  # none | regenerated | flagged

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "triggered": self.triggered,
            "evidence_text": self.evidence_text,
            "evidence_span": list(self.evidence_span) if self.evidence_span else None,
            "action_taken": self.action_taken,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GuardVerdict":
        span = obj.get("evidence_span")
        return cls(
            rule=obj["rule"],
            triggered=obj["triggered"],
            evidence_text=obj.get("evidence_text"),
            evidence_span=tuple(span) if span else None,
            action_taken=obj.get("action_taken", "none"),
        )


@dataclass
class ChatTurn:
    role: str  # interviewer | interlocutor
    text: str
    hits: list[RetrievalHit] = field(default_factory=list)
    guard_verdicts: list[GuardVerdict] = field(default_factory=list)
    regen_count: int = 0
    partial: bool = False
    created_at: str = field(default_factory=_now)

    def to_json(self) -> dict:
        return {
            "role": self.role,
            "text": self.text,
            "hits": [h.to_json() for h in self.hits],
            "guard_verdicts": [v.to_json() for v in self.guard_verdicts],
            "regen_count": self.regen_count,
            "partial": self.partial,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChatTurn":
        return cls(
            role=obj["role"],
            text=obj["text"],
            hits=[
                RetrievalHit(h["chunk_id"], h["score"], h["rank"])
                for h in obj.get("hits", [])
            ],
            guard_verdicts=[
                GuardVerdict.from_json(v) for v in obj.get("guard_verdicts", [])
            ],
            regen_count=obj.get("regen_count", 0),
            partial=obj.get("partial", False),
            created_at=obj.get("created_at", ""),
        )


@dataclass
class Session:
    id: str
    corpus_id: str
    created_at: str = field(default_factory=_now)
    turns: list[ChatTurn] = field(default_factory=list)
    generation_params: GenerationParams = field(default_factory=GenerationParams)
    retrieval_config: RetrievalConfig = field(default_factory=RetrievalConfig)
    prompt_template_id: str = "si_v1"
    status: str = "active"  # active | closed

    def history_texts(self) -> list[str]:
        return [t.text for t in self.turns]

    def interviewer_turns(self) -> list[ChatTurn]:
        return [t for t in self.turns if t.role == "interviewer"]

    def meta_json(self) -> dict:
        return {
            "id": self.id,
            "corpus_id": self.corpus_id,
            "created_at": self.created_at,
            "generation_params": self.generation_params.to_json(),
            "retrieval_config": self.retrieval_config.to_json(),
            "prompt_template_id": self.prompt_template_id,
            "status": self.status,
        }

    def to_json(self) -> dict:
        return {**self.meta_json(), "turns": [t.to_json() for t in self.turns]}


class SessionStore:
    """Filesystem-backed registry of sessions; appends are atomic per turn pair."""

    def __init__(self, sessions_dir: str | Path):
        self.dir = Path(sessions_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for meta_path in sorted(self.dir.glob("*.meta.json")):
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
                session = Session(
                    id=meta["id"],
                    corpus_id=meta["corpus_id"],
                    created_at=meta["created_at"],
                    generation_params=GenerationParams.from_json(
                        meta["generation_params"]
                    ),
                    retrieval_config=RetrievalConfig.from_json(
                        meta["retrieval_config"]
                    ),
                    prompt_template_id=meta.get("prompt_template_id", "si_v1"),
                    status=meta.get("status", "active"),
                )
            except (OSError, KeyError, ValueError) as exc:
                # Unreadable header: skip the session rather than refuse to start.
                logger.warning("skipping session %s: %s", meta_path.name, exc)
                continue
            jsonl = self.dir / f"{session.id}.jsonl"
            if jsonl.exists():
                with jsonl.open(encoding="utf-8") as f:
                    for line in f:
                        if line.strip():
                            session.turns.append(ChatTurn.from_json(json.loads(line)))
            self._sessions[session.id] = session

    def create(
        self,
        corpus_id: str,
        generation_params: GenerationParams | None = None,
        retrieval_config: RetrievalConfig | None = None,
        prompt_template_id: str = "si_v1",
    ) -> Session:
        session = Session(
            id=uuid.uuid4().hex,
            corpus_id=corpus_id,
            generation_params=generation_params or GenerationParams(),
            retrieval_config=retrieval_config or RetrievalConfig(),
            prompt_template_id=prompt_template_id,
        )
        meta_path = self.dir / f"{session.id}.meta.json"
        meta_path.write_text(
            json.dumps(session.meta_json(), indent=2), encoding="utf-8"
        )
        with self._registry_lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionNotFound(f"unknown session {session_id!r}") from None

    def list_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._sessions)

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise SessionNotFound(f"unknown session {session_id!r}")
            return self._locks.setdefault(session_id, threading.Lock())

    def append_turns(self, session: Session, turns: list[ChatTurn]) -> None:
        """Append turns to memory and disk together; a turn is visible in the
        transcript only once its line has been flushed."""
        jsonl = self.dir / f"{session.id}.jsonl"
        payload = "".join(
            json.dumps(t.to_json(), ensure_ascii=False) + "\n" for t in turns
        )
        with jsonl.open("a", encoding="utf-8") as f:
            f.write(payload)
            f.flush()
        session.turns.extend(turns)

    def close_session(self, session: Session) -> None:
        session.status = "closed"
        meta_path = self.dir / f"{session.id}.meta.json"
        meta_path.write_text(
            json.dumps(session.meta_json(), indent=2), encoding="utf-8"
        )
