import hashlib

import numpy as np
import pytest

from synthetic_interlocutor.embedding import stub_embed
from synthetic_interlocutor.errors import (
    ChecksumMismatch,
    CorruptFile,
    DimMismatch,
    DuplicateId,
    NormViolation,
)
from synthetic_interlocutor.vectorstore import (
    HnswParams,
    IndexEntry,
    build_index,
    load_entries,
    save_entries,
)

from oracle import brute_force_topk


def stub_entries(n, dim=32, prefix="doc"):
    return [
        IndexEntry(chunk_id=f"{prefix}{i:05d}#0", vector=stub_embed(f"text {i}", dim))
        for i in range(n)
    ]


def test_empty_index_returns_empty():
    for kind in ("flat", "hnsw"):
        idx = build_index([], kind=kind)
        assert len(idx) == 0
        assert idx.query(stub_embed("q", 32), 5) == []


def test_single_entry_identity():
    v = stub_embed("only", 16)
    idx = build_index([IndexEntry("a#0", v)], kind="flat")
    hits = idx.query(v, 1)
    assert len(hits) == 1
    assert hits[0].chunk_id == "a#0"
    assert hits[0].rank == 0
    assert abs(hits[0].score - 1.0) < 1e-6


def test_orthogonal_score_zero():
    idx = build_index(
        [IndexEntry("a#0", np.array([1.0, 0.0], dtype=np.float32))], kind="flat"
    )
    hits = idx.query(np.array([0.0, 1.0], dtype=np.float32), 1)
    assert abs(hits[0].score) < 1e-6


def test_k_larger_than_index():
    entries = stub_entries(3)
    idx = build_index(entries, kind="flat")
    assert len(idx.query(stub_embed("q", 32), 10)) == 3


def test_tie_break_ascending_id():
    v = stub_embed("same", 8)
    idx = build_index(
        [IndexEntry("b#0", v.copy()), IndexEntry("a#0", v.copy())], kind="flat"
    )
    hits = idx.query(v, 1)
    assert hits[0].chunk_id == "a#0"
    # brute force agrees
    want = brute_force_topk(
        [IndexEntry("b#0", v), IndexEntry("a#0", v)], v, 1
    )
    assert want[0][0] == "a#0"


def test_duplicate_id_rejected():
    v = stub_embed("x", 8)
    with pytest.raises(DuplicateId):
        build_index([IndexEntry("a#0", v), IndexEntry("a#0", v)], kind="flat")


def test_dim_mismatch_rejected():
    with pytest.raises(DimMismatch):
        build_index(
            [
                IndexEntry("a#0", stub_embed("x", 8)),
                IndexEntry("b#0", stub_embed("y", 16)),
            ],
            kind="flat",
        )


def test_norm_violation_rejected():
    bad = (stub_embed("x", 8) * 2.0).astype(np.float32)
    with pytest.raises(NormViolation):
        build_index([IndexEntry("a#0", bad)], kind="flat")


def test_query_dim_checked():
    idx = build_index(stub_entries(5, dim=8), kind="flat")
    with pytest.raises(DimMismatch):
        idx.query(stub_embed("q", 16), 1)


def test_flat_matches_brute_force_small():
    entries = stub_entries(500)
    idx = build_index(entries, kind="flat")
    for i in range(20):
        q = stub_embed(f"query {i}", 32)
        hits = idx.query(q, 10)
        want = brute_force_topk(entries, q, 10)
        assert [h.chunk_id for h in hits] == [cid for cid, _ in want]
        for h, (_, score) in zip(hits, want):
            assert abs(h.score - score) < 1e-6


def test_hnsw_identity_and_bounds():
    entries = stub_entries(200, dim=16)
    idx = build_index(entries, kind="hnsw", params=HnswParams())
    for i in (0, 57, 199):
        q = entries[i].vector
        hits = idx.query(q, 1)
        assert hits[0].chunk_id == entries[i].chunk_id
        assert abs(hits[0].score - 1.0) < 1e-6
    for h in idx.query(stub_embed("far away", 16), 10):
        assert -1.000001 <= h.score <= 1.000001


def test_hnsw_deterministic_build():
    entries = stub_entries(300, dim=16)
    a = build_index(entries, kind="hnsw", params=HnswParams(seed=42))
    b = build_index(entries, kind="hnsw", params=HnswParams(seed=42))
    for i in range(10):
        q = stub_embed(f"q{i}", 16)
        ha = [(h.chunk_id, h.score) for h in a.query(q, 5)]
        hb = [(h.chunk_id, h.score) for h in b.query(q, 5)]
        assert ha == hb


def test_hnsw_recall_small():
    entries = stub_entries(1000)
    flat = build_index(entries, kind="flat")
    hnsw = build_index(entries, kind="hnsw")
    agree = 0
    queries = 50
    for i in range(queries):
        q = stub_embed(f"probe {i}", 32)
        if hnsw.query(q, 1)[0].chunk_id == flat.query(q, 1)[0].chunk_id:
            agree += 1
    assert agree >= int(queries * 0.9)


def test_scores_non_increasing_and_ranks_contiguous():
    entries = stub_entries(100)
    for kind in ("flat", "hnsw"):
        idx = build_index(entries, kind=kind)
        hits = idx.query(stub_embed("q", 32), 10)
        assert [h.rank for h in hits] == list(range(10))
        for a, b in zip(hits, hits[1:]):
            assert a.score >= b.score
        assert len({h.chunk_id for h in hits}) == 10


# --- persistence ---


def test_round_trip_bit_exact(tmp_path):
    entries = stub_entries(100, dim=24)
    path = tmp_path / "vectors.bin"
    save_entries(entries, path)
    loaded = load_entries(path)
    assert [e.chunk_id for e in loaded] == [e.chunk_id for e in entries]
    for a, b in zip(entries, loaded):
        assert a.vector.tobytes() == b.vector.tobytes()
    # saving the loaded entries reproduces the file byte for byte
    path2 = tmp_path / "again.bin"
    save_entries(loaded, path2)
    assert hashlib.sha256(path.read_bytes()).hexdigest() == hashlib.sha256(
        path2.read_bytes()
    ).hexdigest()


def test_round_trip_preserves_query_results(tmp_path):
    entries = stub_entries(200)
    path = tmp_path / "v.bin"
    save_entries(entries, path)
    idx1 = build_index(entries, kind="flat")
    idx2 = build_index(load_entries(path), kind="flat")
    for i in range(10):
        q = stub_embed(f"q{i}", 32)
        assert [
            (h.chunk_id, h.score) for h in idx1.query(q, 5)
        ] == [(h.chunk_id, h.score) for h in idx2.query(q, 5)]


def test_truncated_file_is_corrupt(tmp_path):
    path = tmp_path / "v.bin"
    save_entries(stub_entries(10, dim=8), path)
    blob = path.read_bytes()
    for cut in (len(blob) - 5, len(blob) // 2, 10):
        path.write_bytes(blob[:cut])
        with pytest.raises(CorruptFile):
            load_entries(path)


def test_flipped_payload_byte_is_checksum_mismatch(tmp_path):
    path = tmp_path / "v.bin"
    save_entries(stub_entries(10, dim=8), path)
    blob = bytearray(path.read_bytes())
    # flip a byte inside the last vector's floats: structure stays parseable
    blob[-6] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ChecksumMismatch):
        load_entries(path)


def test_bad_magic_is_corrupt(tmp_path):
    path = tmp_path / "v.bin"
    save_entries(stub_entries(2, dim=8), path)
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CorruptFile):
        load_entries(path)


def test_empty_entries_round_trip(tmp_path):
    path = tmp_path / "v.bin"
    save_entries([], path)
    assert load_entries(path) == []
