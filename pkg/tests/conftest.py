import random

import pytest

from synthetic_interlocutor.documents import ChunkingConfig
from synthetic_interlocutor.embedding import StubEmbedder
from synthetic_interlocutor.ingest import ingest_corpus

_WORDS = (
    "village harvest winter meeting coffee camera security password diary "
    "audience screen neighbor kitchen morning journey ticket archive story "
    "pandemic office friend family network garden question answer memory"
).split()


def random_text(rng: random.Random, n_tokens: int, with_punct: bool = True) -> str:
    parts = []
    for _ in range(n_tokens):
        parts.append(rng.choice(_WORDS))
        if with_punct and rng.random() < 0.15:
            parts.append(rng.choice([".", ",", "!", "?", ";"]))
        parts.append("\n" if rng.random() < 0.05 else " ")
    return "".join(parts).strip()


def random_transcript(rng: random.Random, n_turns: int, words_per_turn: int) -> str:
    lines = []
    speakers = ["INTERVIEWER", "ANNA", "B", "Consultant 2"]
    for _ in range(n_turns):
        who = rng.choice(speakers)
        utterance = " ".join(rng.choice(_WORDS) for _ in range(words_per_turn))
        lines.append(f"{who}: {utterance}")
        if rng.random() < 0.2:
            lines.append("")
    return "\n".join(lines)


@pytest.fixture
def stub_embedder():
    return StubEmbedder(dim=32)


@pytest.fixture
def small_corpus_dir(tmp_path, stub_embedder):
    """Three short documents ingested with the stub embedder."""
    source = tmp_path / "source"
    source.mkdir()
    (source / "garden.txt").write_text("I love gardening. The roses need patience.")
    (source / "films.txt").write_text(
        "A: What did you think of the film?\nB: The ending surprised me, honestly."
    )
    (source / "covid.txt").write_text(
        "The village went quiet in March. We played games over video calls."
    )
    out = tmp_path / "data" / "trial"
    ingest_corpus(source, "trial", ChunkingConfig(), stub_embedder, out)
    return out


@pytest.fixture
def single_doc_corpus_dir(tmp_path, stub_embedder):
    source = tmp_path / "one-src"
    source.mkdir()
    (source / "note.txt").write_text("I love gardening.")
    out = tmp_path / "data" / "solo"
    ingest_corpus(source, "solo", ChunkingConfig(), stub_embedder, out)
    return out
