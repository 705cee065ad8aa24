"""On-disk corpus layout and in-memory corpus store.

A corpus directory holds ``manifest.json``, ``docs.jsonl``, ``chunks.jsonl``
and ``vectors.bin``. The manifest is written last and acts as the commit
point: a directory without one is treated as absent, never half-loaded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .documents import (
    Chunk,
    CorpusManifest,
    Document,
    document_from_json,
    document_to_json,
)
from .errors import CorpusNotFound, CorruptCorpus
from .vectorstore import IndexEntry, load_entries, save_entries

MANIFEST_FILE = "manifest.json"
DOCS_FILE = "docs.jsonl"
CHUNKS_FILE = "chunks.jsonl"
VECTORS_FILE = "vectors.bin"


@dataclass
class Corpus:
    manifest: CorpusManifest
    documents: dict[str, Document]
    chunks: dict[str, Chunk]
    chunk_order: list[str]
    entries: list[IndexEntry]
    path: Path | None = None

    def chunk_text(self, chunk_id: str) -> str:
        return self.chunks[chunk_id].text


def has_manifest(corpus_dir: str | Path) -> bool:
    return (Path(corpus_dir) / MANIFEST_FILE).exists()


def write_corpus(
    corpus_dir: str | Path,
    manifest: CorpusManifest,
    documents: list[Document],
    chunks: list[Chunk],
    entries: list[IndexEntry],
) -> None:
    """Persist a corpus; the manifest goes last so partial writes stay invisible."""
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)

    with (corpus_dir / DOCS_FILE).open("w", encoding="utf-8") as f:
        for doc in documents:
            f.write(json.dumps(document_to_json(doc), ensure_ascii=False) + "\n")
    with (corpus_dir / CHUNKS_FILE).open("w", encoding="utf-8") as f:
        for chunk in chunks:
            f.write(json.dumps(chunk.to_json(), ensure_ascii=False) + "\n")
    save_entries(entries, corpus_dir / VECTORS_FILE)

    tmp = corpus_dir / (MANIFEST_FILE + ".tmp")
    tmp.write_text(
        json.dumps(manifest.to_json(), indent=2, ensure_ascii=False), encoding="utf-8"
    )
    tmp.replace(corpus_dir / MANIFEST_FILE)


def load_corpus(corpus_dir: str | Path) -> Corpus:
    """Load a corpus directory, validating counts and vector dimensions."""
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / MANIFEST_FILE
    if not manifest_path.exists():
        raise CorpusNotFound(f"no manifest in {corpus_dir}")
    try:
        manifest = CorpusManifest.from_json(
            json.loads(manifest_path.read_text(encoding="utf-8"))
        )
        documents: dict[str, Document] = {}
        with (corpus_dir / DOCS_FILE).open(encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    doc = document_from_json(json.loads(line))
                    documents[doc.id] = doc
        chunks: dict[str, Chunk] = {}
        chunk_order: list[str] = []
        with (corpus_dir / CHUNKS_FILE).open(encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    chunk = Chunk.from_json(json.loads(line))
                    chunks[chunk.id] = chunk
                    chunk_order.append(chunk.id)
        entries = load_entries(corpus_dir / VECTORS_FILE)
    except CorpusNotFound:
        raise
    except Exception as exc:
        raise CorruptCorpus(f"failed to load corpus at {corpus_dir}: {exc}") from exc

    if manifest.document_count != len(documents):
        raise CorruptCorpus(
            f"{corpus_dir}: manifest says {manifest.document_count} documents, "
            f"found {len(documents)}"
        )
    if manifest.chunk_count != len(chunks) or manifest.chunk_count != len(entries):
        raise CorruptCorpus(
            f"{corpus_dir}: manifest says {manifest.chunk_count} chunks, "
            f"found {len(chunks)} chunk records and {len(entries)} vectors"
        )
    for e in entries:
        if e.vector.shape[0] != manifest.embedding_dim:
            raise CorruptCorpus(
                f"{corpus_dir}: vector dim {e.vector.shape[0]} != manifest "
                f"embedding_dim {manifest.embedding_dim}"
            )
        if e.chunk_id not in chunks:
            raise CorruptCorpus(f"{corpus_dir}: vector for unknown chunk {e.chunk_id!r}")

    return Corpus(
        manifest=manifest,
        documents=documents,
        chunks=chunks,
        chunk_order=chunk_order,
        entries=entries,
        path=corpus_dir,
    )


def discover_corpora(data_dir: str | Path) -> list[Path]:
    """Corpus directories under data_dir, i.e. subdirectories with a manifest."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        return []
    return sorted(d for d in data_dir.iterdir() if d.is_dir() and has_manifest(d))
