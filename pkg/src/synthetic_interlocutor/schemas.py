"""JSON Schemas for every payload the HTTP API emits.

Served at ``GET /api/schema`` so clients can validate what they consume
instead of trusting their own parsing assumptions.
"""

from __future__ import annotations

RETRIEVAL_HIT = {
    "type": "object",
    "required": ["chunk_id", "score", "rank"],
    "properties": {
        "chunk_id": {"type": "string"},
        "score": {"type": "number", "minimum": -1.000001, "maximum": 1.000001},
        "rank": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

GUARD_VERDICT = {
    "type": "object",
    "required": ["rule", "triggered", "action_taken"],
    "properties": {
        "rule": {
            "type": "string",
            "enum": [
                "R1_genre",
                "R2_continuation",
                "R3_no_prior_meeting",
                "R4_no_ascription",
            ],
        },
        "triggered": {"type": "boolean"},
        "evidence_text": {"type": ["string", "null"]},
        "evidence_span": {
            "type": ["array", "null"],
            "items": {"type": "integer", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "action_taken": {"type": "string", "enum": ["none", "regenerated", "flagged"]},
    },
    "additionalProperties": False,
}

CHAT_TURN = {
    "type": "object",
    "required": ["role", "text", "hits", "guard_verdicts", "regen_count", "partial"],
    "properties": {
        "role": {"type": "string", "enum": ["interviewer", "interlocutor"]},
        "text": {"type": "string"},
        "hits": {"type": "array", "items": RETRIEVAL_HIT},
        "guard_verdicts": {"type": "array", "items": GUARD_VERDICT},
        "regen_count": {"type": "integer", "minimum": 0},
        "partial": {"type": "boolean"},
        "created_at": {"type": "string"},
    },
    "additionalProperties": False,
}

CHUNKING_CONFIG = {
    "type": "object",
    "required": ["strategy", "max_chunk_tokens", "overlap_tokens", "min_chunk_tokens"],
    "properties": {
        "strategy": {"type": "string", "enum": ["token_window", "speaker_turn"]},
        "max_chunk_tokens": {"type": "integer", "minimum": 1},
        "overlap_tokens": {"type": "integer", "minimum": 0},
        "min_chunk_tokens": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

MANIFEST = {
    "type": "object",
    "required": [
        "corpus_id",
        "display_name",
        "embedding_model_id",
        "embedding_dim",
        "chunking",
        "document_count",
        "chunk_count",
        "created_at",
        "format_version",
    ],
    "properties": {
        "corpus_id": {"type": "string"},
        "display_name": {"type": "string"},
        "embedding_model_id": {"type": "string"},
        "embedding_dim": {"type": "integer", "minimum": 0},
        "chunking": CHUNKING_CONFIG,
        "document_count": {"type": "integer", "minimum": 0},
        "chunk_count": {"type": "integer", "minimum": 0},
        "created_at": {"type": "string"},
        "format_version": {"type": "integer"},
    },
    "additionalProperties": False,
}

CORPORA_LIST = {"type": "array", "items": MANIFEST}

SESSION_CREATED = {
    "type": "object",
    "required": ["session_id"],
    "properties": {"session_id": {"type": "string"}},
    "additionalProperties": False,
}

SESSION_VIEW = {
    "type": "object",
    "required": ["id", "corpus_id", "created_at", "status", "turns"],
    "properties": {
        "id": {"type": "string"},
        "corpus_id": {"type": "string"},
        "created_at": {"type": "string"},
        "status": {"type": "string", "enum": ["active", "closed"]},
        "turns": {"type": "array", "items": CHAT_TURN},
        "generation_params": {"type": "object"},
        "retrieval_config": {"type": "object"},
        "prompt_template_id": {"type": "string"},
    },
    "additionalProperties": False,
}

SESSION_LIST = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["id", "corpus_id", "created_at", "status", "turn_count"],
        "properties": {
            "id": {"type": "string"},
            "corpus_id": {"type": "string"},
            "created_at": {"type": "string"},
            "status": {"type": "string"},
            "turn_count": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
}

CHUNK_DETAIL = {
    "type": "object",
    "required": ["id", "doc_id", "ordinal", "text", "token_count", "document"],
    "properties": {
        "id": {"type": "string"},
        "doc_id": {"type": "string"},
        "ordinal": {"type": "integer", "minimum": 0},
        "text": {"type": "string"},
        "span": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "token_count": {"type": "integer", "minimum": 0},
        "document": {
            "type": "object",
            "required": ["id", "kind", "source_path", "metadata"],
            "properties": {
                "id": {"type": "string"},
                "kind": {"type": "string"},
                "source_path": {"type": "string"},
                "metadata": {"type": "object"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

ERROR = {
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {
                "code": {"type": "string"},
                "message": {"type": "string"},
            },
            "additionalProperties": False,
        }
    },
    "additionalProperties": False,
}

SSE_RETRIEVAL = {
    "type": "object",
    "required": ["hits"],
    "properties": {"hits": {"type": "array", "items": RETRIEVAL_HIT}},
    "additionalProperties": False,
}

SSE_TOKEN = {
    "type": "object",
    "required": ["text", "attempt"],
    "properties": {
        "text": {"type": "string"},
        "attempt": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

SSE_GUARDS = {
    "type": "object",
    "required": ["verdicts"],
    "properties": {"verdicts": {"type": "array", "items": GUARD_VERDICT}},
    "additionalProperties": False,
}

SSE_DONE = {
    "type": "object",
    "required": ["turn"],
    "properties": {"turn": CHAT_TURN},
    "additionalProperties": False,
}

SSE_ERROR = ERROR

ALL_SCHEMAS = {
    "manifest": MANIFEST,
    "corpora_list": CORPORA_LIST,
    "session_created": SESSION_CREATED,
    "session_view": SESSION_VIEW,
    "session_list": SESSION_LIST,
    "chat_turn": CHAT_TURN,
    "retrieval_hit": RETRIEVAL_HIT,
    "guard_verdict": GUARD_VERDICT,
    "chunk_detail": CHUNK_DETAIL,
    "error": ERROR,
    "sse_retrieval": SSE_RETRIEVAL,
    "sse_token": SSE_TOKEN,
    "sse_guards": SSE_GUARDS,
    "sse_done": SSE_DONE,
    "sse_error": SSE_ERROR,
}
