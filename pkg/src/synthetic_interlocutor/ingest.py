"""Corpus ingestion: parse, chunk, embed, persist.

Sources are ``.txt`` files found recursively under the source directory;
an optional ``<name>.meta.json`` sidecar supplies the document kind and
extra metadata. Document ids are the POSIX-style relative paths, so chunk
ids like ``interviews/day1.txt#3`` are stable provenance keys. Processing
order is sorted by document id, which keeps re-ingestion byte-identical
for identical inputs and configuration.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .chunking import chunk_document
from .corpus import write_corpus
from .documents import (
    Chunk,
    ChunkingConfig,
    CorpusManifest,
    Document,
    DOC_KINDS,
    parse_source,
    read_sidecar_meta,
)
from .errors import IngestFailed, SiError
from .vectorstore import IndexEntry

logger = logging.getLogger(__name__)


def find_source_files(source_dir: str | Path) -> list[Path]:
    source_dir = Path(source_dir)
    return sorted(
        p for p in source_dir.rglob("*.txt") if p.is_file()
    )


def ingest_corpus(
    source_dir: str | Path,
    corpus_id: str,
    cfg: ChunkingConfig,
    embedder,
    out_dir: str | Path,
    display_name: str | None = None,
) -> CorpusManifest:
    """Ingest every .txt under source_dir into a corpus directory.

    Any unreadable, undecodable, or empty source file aborts the ingest;
    the raised IngestFailed lists every failing file with its reason.
    """
    cfg.validate()
    source_dir = Path(source_dir)
    files = find_source_files(source_dir)
    if not files:
        raise IngestFailed(f"no .txt source files under {source_dir}")

    documents: list[Document] = []
    errors: list[tuple[str, str]] = []
    for path in files:
        rel = path.relative_to(source_dir).as_posix()
        meta = read_sidecar_meta(path)
        kind = meta.pop("kind", "")
        try:
            doc = parse_source(
                path,
                kind=kind if kind in DOC_KINDS else "other",
                parser_hints={"doc_id": rel, "corpus_id": corpus_id, **meta},
            )
        except SiError as exc:
            errors.append((rel, f"{type(exc).__name__}: {exc}"))
            continue
        if not kind and doc.turns:
            doc.kind = "interview_transcript"
        documents.append(doc)

    if errors:
        listing = "; ".join(f"{name} ({msg})" for name, msg in errors[:5])
        raise IngestFailed(
            f"{len(errors)} of {len(files)} source files failed: {listing}",
            file_errors=errors,
        )

    documents.sort(key=lambda d: d.id)
    all_chunks: list[Chunk] = []
    for doc in documents:
        all_chunks.extend(chunk_document(doc, cfg))

    texts = [c.text for c in all_chunks]
    vectors = embedder.embed_batch(texts) if texts else []
    entries = [
        IndexEntry(chunk_id=c.id, vector=v) for c, v in zip(all_chunks, vectors)
    ]
    dim = vectors[0].shape[0] if vectors else 0

    manifest = CorpusManifest(
        corpus_id=corpus_id,
        display_name=display_name or corpus_id,
        embedding_model_id=getattr(embedder, "model_id", "unknown"),
        embedding_dim=dim,
        chunking=cfg,
        document_count=len(documents),
        chunk_count=len(all_chunks),
    )
    write_corpus(out_dir, manifest, documents, all_chunks, entries)
    logger.info(
        "ingested corpus %s: %d documents, %d chunks, dim %d",
        corpus_id,
        len(documents),
        len(all_chunks),
        dim,
    )
    return manifest
