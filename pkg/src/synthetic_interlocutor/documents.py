"""Source documents, chunks, and corpus-level configuration records."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyDocument, EncodingError, InvalidConfig, IoError

DOC_KINDS = ("interview_transcript", "fieldnote", "diary", "other")

# A speaker line opens a turn: label of 1..40 chars before the first colon,
# not starting with whitespace and containing no colon itself.
_SPEAKER_LINE_RE = re.compile(r"^(?P<label>[^\s:][^:\n]{0,39}):(?P<rest>.*)$")


@dataclass
class Turn:
    """One speaker turn inside a transcript; span covers label and utterance."""

    speaker: str
    start: int
    end: int


@dataclass
class Document:
    id: str
    corpus_id: str
    source_path: str
    kind: str
    text: str
    turns: list[Turn] | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.text.strip():
            raise EmptyDocument(f"document {self.id!r} is empty")
        if self.kind not in DOC_KINDS:
            raise InvalidConfig(f"unknown document kind {self.kind!r}")
        if self.turns is not None:
            prev_end = 0
            for turn in self.turns:
                if not (0 <= turn.start < turn.end <= len(self.text)):
                    raise InvalidConfig(f"turn span out of range in {self.id!r}")
                if turn.start < prev_end:
                    raise InvalidConfig(f"overlapping turns in {self.id!r}")
                prev_end = turn.end


@dataclass
class Chunk:
    id: str
    doc_id: str
    ordinal: int
    text: str
    start: int
    end: int
    token_count: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "text": self.text,
            "span": [self.start, self.end],
            "token_count": self.token_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Chunk":
        return cls(
            id=obj["id"],
            doc_id=obj["doc_id"],
            ordinal=obj["ordinal"],
            text=obj["text"],
            start=obj["span"][0],
            end=obj["span"][1],
            token_count=obj["token_count"],
        )


@dataclass
class ChunkingConfig:
    strategy: str = "token_window"
    max_chunk_tokens: int = 256
    overlap_tokens: int = 32
    min_chunk_tokens: int = 16

    def validate(self) -> None:
        if self.strategy not in ("token_window", "speaker_turn"):
            raise InvalidConfig(f"unknown chunking strategy {self.strategy!r}")
        if self.max_chunk_tokens <= 0:
            raise InvalidConfig("max_chunk_tokens must be > 0")
        if not (0 <= self.overlap_tokens < self.max_chunk_tokens):
            raise InvalidConfig("overlap_tokens must be in [0, max_chunk_tokens)")
        if self.overlap_tokens * 2 > self.max_chunk_tokens:
            # Larger overlaps would copy tokens into three or more windows,
            # breaking the two-adjacent-chunks guarantee.
            raise InvalidConfig("overlap_tokens must be <= max_chunk_tokens / 2")
        if not (1 <= self.min_chunk_tokens <= self.max_chunk_tokens):
            raise InvalidConfig("min_chunk_tokens must be in [1, max_chunk_tokens]")

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "max_chunk_tokens": self.max_chunk_tokens,
            "overlap_tokens": self.overlap_tokens,
            "min_chunk_tokens": self.min_chunk_tokens,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChunkingConfig":
        cfg = cls(**obj)
        cfg.validate()
        return cfg


MANIFEST_FORMAT_VERSION = 1


@dataclass
class CorpusManifest:
    corpus_id: str
    display_name: str
    embedding_model_id: str
    embedding_dim: int
    chunking: ChunkingConfig
    document_count: int
    chunk_count: int
    created_at: str = ""
    format_version: int = MANIFEST_FORMAT_VERSION

    def __post_init__(self):
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).isoformat()

    def to_json(self) -> dict:
        return {
            "corpus_id": self.corpus_id,
            "display_name": self.display_name,
            "embedding_model_id": self.embedding_model_id,
            "embedding_dim": self.embedding_dim,
            "chunking": self.chunking.to_json(),
            "document_count": self.document_count,
            "chunk_count": self.chunk_count,
            "created_at": self.created_at,
            "format_version": self.format_version,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CorpusManifest":
        obj = dict(obj)
        obj["chunking"] = ChunkingConfig.from_json(obj["chunking"])
        return cls(**obj)


def document_to_json(doc: Document) -> dict:
    return {
        "id": doc.id,
        "corpus_id": doc.corpus_id,
        "source_path": doc.source_path,
        "kind": doc.kind,
        "text": doc.text,
        "turns": None
        if doc.turns is None
        else [{"speaker": t.speaker, "span": [t.start, t.end]} for t in doc.turns],
        "metadata": doc.metadata,
    }


def document_from_json(obj: dict) -> Document:
    turns = obj.get("turns")
    return Document(
        id=obj["id"],
        corpus_id=obj["corpus_id"],
        source_path=obj["source_path"],
        kind=obj["kind"],
        text=obj["text"],
        turns=None
        if turns is None
        else [Turn(t["speaker"], t["span"][0], t["span"][1]) for t in turns],
        metadata=obj.get("metadata", {}),
    )


def _detect_turns(text: str) -> list[Turn] | None:
    """Detect the `SPEAKER: utterance` transcript grammar.

    A file counts as a transcript when its first non-blank line is a speaker
    line and at least two speaker lines occur. Lines that do not open a turn
    continue the current one, so multi-line utterances keep a single span.
    The span of a turn runs from the start of its speaker label to the end of
    its last non-blank line.
    """
    turns: list[Turn] = []
    current: Turn | None = None
    saw_first_content = False
    pos = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        content_len = len(line.rstrip())
        if stripped:
            m = _SPEAKER_LINE_RE.match(line)
            if m:
                if current is not None:
                    turns.append(current)
                current = Turn(m.group("label").strip(), pos, pos + content_len)
            elif current is not None:
                current.end = pos + content_len
            elif not saw_first_content:
                return None  # leading non-speaker content: not a transcript
            saw_first_content = True
        pos += len(line)
    if current is not None:
        turns.append(current)
    if len(turns) < 2:
        return None
    return turns


def parse_source(
    path: str | Path,
    kind: str = "other",
    parser_hints: dict[str, str] | None = None,
) -> Document:
    """Parse one source file into a Document.

    The text is whitespace-trimmed at both ends; turn spans index into the
    trimmed text. `parser_hints` may carry `corpus_id` and `doc_id` plus any
    metadata to attach.
    """
    hints = dict(parser_hints or {})
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"{path} is not valid UTF-8: {exc}") from exc
    text = text.strip()
    if not text:
        raise EmptyDocument(f"{path} contains only whitespace")

    doc_id = hints.pop("doc_id", path.name)
    corpus_id = hints.pop("corpus_id", "")
    doc = Document(
        id=doc_id,
        corpus_id=corpus_id,
        source_path=str(path),
        kind=kind,
        text=text,
        turns=_detect_turns(text),
        metadata=hints,
    )
    doc.validate()
    return doc


def read_sidecar_meta(path: Path) -> dict[str, str]:
    """Read the optional per-file meta sidecar (`x.txt.meta.json` or `x.meta.json`)."""
    sidecar = path.with_suffix(path.suffix + ".meta.json")
    alt = path.with_suffix(".meta.json")
    for candidate in (sidecar, alt):
        if candidate.exists():
            try:
                obj = json.loads(candidate.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                return {}
            if isinstance(obj, dict):
                return {str(k): str(v) for k, v in obj.items()}
    return {}
