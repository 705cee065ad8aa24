"""Retrieval-augmented interview chatbot engine for ethnographic corpora."""

from .chunking import chunk_document
from .documents import Chunk, ChunkingConfig, CorpusManifest, Document, parse_source
from .embedding import EmbedderConfig, StubEmbedder, make_embedder, stub_embed
from .engine import DialogueEngine, GuardPolicy
from .guards import GuardLexicon, check_guards, load_default_lexicon
from .ingest import ingest_corpus
from .llm import EchoStubLlm, GenerationParams, LlmConfig, ScriptedStubLlm, make_llm
from .prompts import PromptBundle, PromptTemplate, load_default_template, render
from .retrieval import RetrievalConfig, RetrievedContext, retrieve
from .sessions import ChatTurn, GuardVerdict, Session, SessionStore
from .tokens import count_tokens
from .vectorstore import (
    FlatIndex,
    HnswIndex,
    HnswParams,
    IndexEntry,
    RetrievalHit,
    build_index,
    load_entries,
    save_entries,
)

__version__ = "0.1.0"
