import random

import pytest
from hypothesis import given, settings, strategies as st

from synthetic_interlocutor.chunking import chunk_document
from synthetic_interlocutor.documents import ChunkingConfig, Document
from synthetic_interlocutor.errors import InvalidConfig
from synthetic_interlocutor.documents import parse_source
from synthetic_interlocutor.tokens import count_tokens, token_spans

from conftest import random_text, random_transcript
from oracle import check_chunk_coverage, window_chunk_count


def make_doc(text, doc_id="d"):
    return Document(id=doc_id, corpus_id="c", source_path="", kind="other", text=text)


def windows_cfg(max_tokens=256, overlap=32, min_tokens=16):
    return ChunkingConfig(
        strategy="token_window",
        max_chunk_tokens=max_tokens,
        overlap_tokens=overlap,
        min_chunk_tokens=min_tokens,
    )


def test_invalid_config_rejected():
    with pytest.raises(InvalidConfig):
        ChunkingConfig(overlap_tokens=256, max_chunk_tokens=256).validate()
    with pytest.raises(InvalidConfig):
        ChunkingConfig(min_chunk_tokens=0).validate()
    with pytest.raises(InvalidConfig):
        ChunkingConfig(strategy="sentences").validate()
    with pytest.raises(InvalidConfig):
        # an overlap above half the window would copy tokens into 3+ chunks
        ChunkingConfig(overlap_tokens=140, max_chunk_tokens=256).validate()


def test_single_window_when_doc_fits():
    rng = random.Random(1)
    text = random_text(rng, 200, with_punct=False)
    n = count_tokens(text)
    assert n <= 256
    chunks = chunk_document(make_doc(text), windows_cfg())
    assert len(chunks) == 1
    assert chunks[0].text == text
    assert chunks[0].token_count == n


def test_exact_budget_single_chunk():
    text = " ".join(["word"] * 256)
    chunks = chunk_document(make_doc(text), windows_cfg())
    assert len(chunks) == 1
    assert chunks[0].token_count == 256


def test_thousand_tokens_five_chunks():
    # ceil((1000 - 32) / (256 - 32)) == 5, checked against the closed form
    text = " ".join(f"w{i}" for i in range(1000))
    doc = make_doc(text)
    assert count_tokens(text) == 1000
    chunks = chunk_document(doc, windows_cfg())
    assert len(chunks) == window_chunk_count(1000, 256, 32) == 5
    check_chunk_coverage(doc.text, chunks)


def test_overlap_tokens_shared_between_neighbors():
    text = " ".join(f"w{i}" for i in range(300))
    doc = make_doc(text)
    chunks = chunk_document(doc, windows_cfg(max_tokens=100, overlap=10))
    spans = token_spans(text)
    for prev, nxt in zip(chunks, chunks[1:]):
        shared = [s for s in spans if s[0] >= nxt.start and s[1] <= prev.end]
        assert len(shared) == 10


def test_chunk_ids_and_ordinals():
    text = " ".join(f"w{i}" for i in range(600))
    chunks = chunk_document(make_doc(text, doc_id="doc.txt"), windows_cfg())
    assert [c.ordinal for c in chunks] == list(range(len(chunks)))
    assert chunks[0].id == "doc.txt#0"
    assert all(c.id == f"doc.txt#{c.ordinal}" for c in chunks)


def test_determinism():
    rng = random.Random(7)
    text = random_text(rng, 900)
    a = chunk_document(make_doc(text), windows_cfg())
    b = chunk_document(make_doc(text), windows_cfg())
    assert [(c.id, c.start, c.end, c.token_count) for c in a] == [
        (c.id, c.start, c.end, c.token_count) for c in b
    ]


def test_speaker_turn_groups_whole_turns(tmp_path):
    lines = [f"A: {' '.join(['alpha'] * 30)}", f"B: {' '.join(['beta'] * 30)}",
             f"A: {' '.join(['gamma'] * 30)}"]
    p = tmp_path / "t.txt"
    p.write_text("\n".join(lines))
    doc = parse_source(p, parser_hints={"doc_id": "t.txt"})
    cfg = ChunkingConfig(strategy="speaker_turn", max_chunk_tokens=70, overlap_tokens=0,
                         min_chunk_tokens=4)
    chunks = chunk_document(doc, cfg)
    # 32 tokens per turn (label + colon + 30 words); two fit per chunk
    assert len(chunks) == 2
    assert chunks[0].text.startswith("A:") and "B:" in chunks[0].text
    assert chunks[1].text.startswith("A:")
    check_chunk_coverage(doc.text, chunks)


def test_speaker_turn_never_splits_fitting_turn(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("A: one two three four five\nB: six seven eight nine ten")
    doc = parse_source(p, parser_hints={"doc_id": "t.txt"})
    cfg = ChunkingConfig(strategy="speaker_turn", max_chunk_tokens=8, overlap_tokens=0,
                         min_chunk_tokens=1)
    chunks = chunk_document(doc, cfg)
    assert len(chunks) == 2
    for chunk, expected in zip(chunks, ["A:", "B:"]):
        assert chunk.text.startswith(expected)


def test_speaker_turn_oversized_turn_falls_back_to_windows(tmp_path):
    p = tmp_path / "t.txt"
    long_turn = " ".join(["long"] * 50)
    p.write_text(f"A: hi there\nB: {long_turn}\nA: bye now")
    doc = parse_source(p, parser_hints={"doc_id": "t.txt"})
    cfg = ChunkingConfig(strategy="speaker_turn", max_chunk_tokens=20, overlap_tokens=4,
                         min_chunk_tokens=3)
    chunks = chunk_document(doc, cfg)
    assert len(chunks) > 3  # oversized middle turn split into windows
    assert all(c.token_count <= 20 for c in chunks[:-1])
    check_chunk_coverage(doc.text, chunks)


def test_trailing_fragment_merges_in_turn_mode(tmp_path):
    p = tmp_path / "t.txt"
    p.write_text("A: one two three four five six\nB: seven eight nine ten eleven twelve\nA: tail")
    doc = parse_source(p, parser_hints={"doc_id": "t.txt"})
    cfg = ChunkingConfig(strategy="speaker_turn", max_chunk_tokens=8, overlap_tokens=0,
                         min_chunk_tokens=4)
    chunks = chunk_document(doc, cfg)
    # "A: tail" alone has 3 tokens < 4, so it folds into the previous chunk
    assert chunks[-1].text.endswith("A: tail")
    assert "B:" in chunks[-1].text
    check_chunk_coverage(doc.text, chunks)


@settings(max_examples=60, deadline=None)
@given(
    n_tokens=st.integers(min_value=1, max_value=1200),
    max_tokens=st.integers(min_value=2, max_value=300),
    data=st.data(),
)
def test_property_window_coverage_and_count(n_tokens, max_tokens, data):
    overlap = data.draw(st.integers(min_value=0, max_value=max_tokens // 2))
    min_tokens = data.draw(st.integers(min_value=1, max_value=min(overlap + 1, max_tokens)))
    rng = random.Random(n_tokens * 31 + max_tokens)
    text = random_text(rng, n_tokens)
    doc = make_doc(text)
    n = count_tokens(text)
    cfg = windows_cfg(max_tokens, overlap, min_tokens)
    chunks = chunk_document(doc, cfg)
    check_chunk_coverage(doc.text, chunks)
    assert all(c.token_count <= max_tokens for c in chunks)
    if n > overlap:
        assert len(chunks) == window_chunk_count(n, max_tokens, overlap)


@settings(max_examples=40, deadline=None)
@given(
    n_turns=st.integers(min_value=2, max_value=12),
    words=st.integers(min_value=1, max_value=40),
    max_tokens=st.integers(min_value=4, max_value=120),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_property_speaker_turn_coverage(tmp_path_factory, n_turns, words, max_tokens, seed):
    rng = random.Random(seed)
    text = random_transcript(rng, n_turns, words)
    p = tmp_path_factory.mktemp("prop") / "t.txt"
    p.write_text(text)
    doc = parse_source(p, parser_hints={"doc_id": "t.txt"})
    cfg = ChunkingConfig(
        strategy="speaker_turn",
        max_chunk_tokens=max_tokens,
        overlap_tokens=min(3, max_tokens // 2),
        min_chunk_tokens=min(2, max_tokens),
    )
    chunks = chunk_document(doc, cfg)
    check_chunk_coverage(doc.text, chunks)


@settings(max_examples=40, deadline=None)
@given(
    n_tokens=st.integers(min_value=5, max_value=800),
    w_small=st.integers(min_value=2, max_value=150),
    w_delta=st.integers(min_value=1, max_value=100),
)
def test_property_monotone_chunk_count(n_tokens, w_small, w_delta):
    rng = random.Random(n_tokens)
    text = random_text(rng, n_tokens)
    doc = make_doc(text)
    small = chunk_document(doc, windows_cfg(w_small, 0, 1))
    large = chunk_document(doc, windows_cfg(w_small + w_delta, 0, 1))
    assert len(small) >= len(large)
