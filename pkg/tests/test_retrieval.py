import pytest

from synthetic_interlocutor.corpus import load_corpus
from synthetic_interlocutor.embedding import StubEmbedder
from synthetic_interlocutor.errors import InvalidConfig
from synthetic_interlocutor.retrieval import RetrievalConfig, build_query_text, retrieve
from synthetic_interlocutor.vectorstore import build_index

from oracle import brute_force_topk


@pytest.fixture
def trial(small_corpus_dir):
    corpus = load_corpus(small_corpus_dir)
    index = build_index(corpus.entries, kind="flat")
    embedder = StubEmbedder(dim=corpus.manifest.embedding_dim)
    return corpus, index, embedder


def test_empty_index_returns_empty_context(stub_embedder):
    index = build_index([], kind="flat")
    rc = retrieve("anything?", [], index, stub_embedder, RetrievalConfig(), lambda c: "")
    assert rc.hits == []
    assert rc.context_text == ""
    assert rc.query_text == "anything?"


def test_top1_context_equals_chunk_text(trial):
    corpus, index, embedder = trial
    rc = retrieve(
        "What did you think of the film?", [], index, embedder,
        RetrievalConfig(k=1), corpus.chunk_text,
    )
    assert len(rc.hits) == 1
    assert rc.context_text == corpus.chunk_text(rc.hits[0].chunk_id)
    want = brute_force_topk(
        corpus.entries, embedder.embed_batch(["What did you think of the film?"])[0], 1
    )
    assert rc.hits[0].chunk_id == want[0][0]


def test_separator_join_order(trial):
    corpus, index, embedder = trial
    rc = retrieve("gardens?", [], index, embedder, RetrievalConfig(k=2), corpus.chunk_text)
    assert len(rc.hits) == 2
    assert rc.hits[0].score >= rc.hits[1].score
    expected = (
        corpus.chunk_text(rc.hits[0].chunk_id)
        + "\n---\n"
        + corpus.chunk_text(rc.hits[1].chunk_id)
    )
    assert rc.context_text == expected


def test_min_score_filters(trial):
    corpus, index, embedder = trial
    rc = retrieve(
        "gardens?", [], index, embedder,
        RetrievalConfig(k=3, min_score=2.0), corpus.chunk_text,
    )
    assert rc.hits == []
    assert rc.context_text == ""


def test_query_modes():
    cfg_last = RetrievalConfig(query_mode="last_message_only")
    assert build_query_text("Q3", ["q1", "a1", "q2", "a2"], cfg_last) == "Q3"

    cfg_win = RetrievalConfig(
        query_mode="last_message_plus_history_window", history_window_turns=2
    )
    assert build_query_text("Q3", ["q1", "a1", "q2", "a2"], cfg_win) == "q2\na2\nQ3"

    cfg_zero = RetrievalConfig(
        query_mode="last_message_plus_history_window", history_window_turns=0
    )
    assert build_query_text("Q3", ["q1"], cfg_zero) == "Q3"


def test_window_mode_changes_embedding(trial):
    corpus, index, embedder = trial
    cfg = RetrievalConfig(
        query_mode="last_message_plus_history_window", history_window_turns=2
    )
    rc = retrieve(
        "and the roses?", ["What did you plant?", "I love gardening."],
        index, embedder, cfg, corpus.chunk_text,
    )
    assert rc.query_text == "What did you plant?\nI love gardening.\nand the roses?"


def test_invalid_inputs(trial):
    corpus, index, embedder = trial
    with pytest.raises(InvalidConfig):
        retrieve("", [], index, embedder, RetrievalConfig(), corpus.chunk_text)
    with pytest.raises(InvalidConfig):
        RetrievalConfig(k=0).validate()
