"""Chunk-vector storage and top-k cosine retrieval.

Two interchangeable indexes answer queries over unit-norm vectors:

* ``FlatIndex`` — exact brute-force scan, the correctness reference.
* ``HnswIndex`` — navigable small-world graph for approximate search.

Cosine similarity is the dot product (vectors arrive normalized from the
embedding layer). Ties are broken by ascending chunk id so results are
reproducible regardless of heap order.

On disk only the vectors are persisted (``vectors.bin``); HNSW graphs are
rebuilt on load. Layout, little-endian: magic ``SIVX``, u32 version, u32
dim, u64 count, then per entry u16 id length + UTF-8 id + dim float32,
and a trailing CRC32 over everything between the magic and the checksum.
"""

from __future__ import annotations

import heapq
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumMismatch,
    CorruptFile,
    DimMismatch,
    DuplicateId,
    InvalidConfig,
    IoError,
    NormViolation,
)

MAGIC = b"SIVX"
FORMAT_VERSION = 1
BUILD_NORM_TOL = 1e-4


@dataclass
class IndexEntry:
    chunk_id: str
    vector: np.ndarray  # float32, unit norm


@dataclass
class RetrievalHit:
    chunk_id: str
    score: float
    rank: int

    def to_json(self) -> dict:
        return {"chunk_id": self.chunk_id, "score": self.score, "rank": self.rank}


@dataclass
class HnswParams:
    m: int = 16
    ef_construction: int = 200
    ef_search: int = 64
    seed: int = 42

    def validate(self) -> None:
        if self.m < 2:
            raise InvalidConfig("hnsw m must be >= 2")
        if self.ef_construction < 1 or self.ef_search < 1:
            raise InvalidConfig("hnsw ef parameters must be >= 1")


def _validate_entries(entries: list[IndexEntry]) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    seen: set[str] = set()
    dim: int | None = None
    for e in entries:
        if e.chunk_id in seen:
            raise DuplicateId(f"duplicate chunk id {e.chunk_id!r}")
        seen.add(e.chunk_id)
        ids.append(e.chunk_id)
        v = np.asarray(e.vector, dtype=np.float32)
        if v.ndim != 1:
            raise DimMismatch(f"vector for {e.chunk_id!r} is not 1-D")
        if dim is None:
            dim = v.shape[0]
        elif v.shape[0] != dim:
            raise DimMismatch(
                f"vector for {e.chunk_id!r} has dim {v.shape[0]}, expected {dim}"
            )
    if not entries:
        return [], np.zeros((0, 0), dtype=np.float32)
    matrix = np.stack([np.asarray(e.vector, dtype=np.float32) for e in entries])
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > BUILD_NORM_TOL)[0]
    if bad.size:
        i = int(bad[0])
        raise NormViolation(
            f"vector for {ids[i]!r} has norm {norms[i]:.6f}, expected 1"
        )
    return ids, matrix


def _check_query(q: np.ndarray, dim: int | None) -> np.ndarray:
    q = np.asarray(q, dtype=np.float32)
    if q.ndim != 1:
        raise DimMismatch("query vector must be 1-D")
    if dim is not None and q.shape[0] != dim:
        raise DimMismatch(f"query dim {q.shape[0]} != index dim {dim}")
    return q


class FlatIndex:
    """Exact top-k scan; scores computed in float64 for stable ordering."""

    kind = "flat"

    def __init__(self, entries: list[IndexEntry]):
        self.ids, matrix = _validate_entries(entries)
        self._matrix64 = matrix.astype(np.float64)
        self.dim: int | None = matrix.shape[1] if self.ids else None

    def __len__(self) -> int:
        return len(self.ids)

    def query(self, q: np.ndarray, k: int = 1) -> list[RetrievalHit]:
        if k < 1:
            raise InvalidConfig("k must be >= 1")
        if not self.ids:
            return []
        q64 = _check_query(q, self.dim).astype(np.float64)
        scores = self._matrix64 @ q64
        n = len(self.ids)
        k = min(k, n)
        # Exact top-k with id tie-break: pull every entry tied with the k-th
        # score, then order candidates by (-score, id).
        if k < n:
            part = np.argpartition(-scores, k - 1)[:k]
            kth = scores[part].min()
            cand = np.nonzero(scores >= kth)[0]
        else:
            cand = np.arange(n)
        ranked = sorted(cand, key=lambda i: (-scores[i], self.ids[i]))[:k]
        return [
            RetrievalHit(chunk_id=self.ids[i], score=float(scores[i]), rank=r)
            for r, i in enumerate(ranked)
        ]


class HnswIndex:
    """Hierarchical navigable small-world graph over unit vectors.

    Construction is deterministic for a given seed and insertion order: the
    level sequence comes from one seeded generator and all heap ties resolve
    on the integer insertion id.
    """

    kind = "hnsw"

    def __init__(self, entries: list[IndexEntry], params: HnswParams | None = None):
        self.params = params or HnswParams()
        self.params.validate()
        self.ids, matrix = _validate_entries(entries)
        self._matrix = matrix
        self.dim: int | None = matrix.shape[1] if self.ids else None

        self._m = self.params.m
        self._m0 = 2 * self.params.m
        self._ml = 1.0 / math.log(self._m)
        self._rng = np.random.default_rng(self.params.seed)

        # Adjacency: one list of neighbor-id lists per layer.
        self._layers: list[list[list[int]]] = []
        self._node_level: list[int] = []
        self._entry_point: int | None = None
        self._max_level = -1

        for node in range(len(self.ids)):
            self._insert(node)

    def __len__(self) -> int:
        return len(self.ids)

    # --- construction ---

    def _random_level(self) -> int:
        u = float(self._rng.uniform(0.0, 1.0))
        if u <= 0.0:
            return 0
        return int(-math.log(u) * self._ml)

    def _neighbors(self, layer: int, node: int) -> list[int]:
        return self._layers[layer][node]

    def _dist_many(self, q: np.ndarray, nodes: list[int]) -> np.ndarray:
        return -(self._matrix[nodes] @ q)

    def _insert(self, node: int) -> None:
        level = self._random_level()
        self._node_level.append(level)
        while len(self._layers) <= level:
            self._layers.append([[] for _ in range(len(self.ids))])

        if self._entry_point is None:
            self._entry_point = node
            self._max_level = level
            return

        q = self._matrix[node]
        ep = [self._entry_point]
        for layer in range(self._max_level, level, -1):
            ep = [nid for _, nid in self._search_layer(q, ep, layer, 1)]

        for layer in range(min(level, self._max_level), -1, -1):
            cands = self._search_layer(q, ep, layer, self.params.ef_construction)
            m_max = self._m0 if layer == 0 else self._m
            selected = self._select_neighbors(cands, self._m)
            self._layers[layer][node] = list(selected)
            for s in selected:
                slist = self._layers[layer][s]
                slist.append(node)
                if len(slist) > m_max:
                    sv = self._matrix[s]
                    scand = sorted(
                        zip(self._dist_many(sv, slist), slist), key=lambda t: (t[0], t[1])
                    )
                    self._layers[layer][s] = self._select_neighbors(scand, m_max)
            ep = [nid for _, nid in cands]

        if level > self._max_level:
            self._max_level = level
            self._entry_point = node

    def _select_neighbors(
        self, candidates: list[tuple[float, int]], m: int
    ) -> list[int]:
        """Diversity-aware selection: keep a candidate only if it is closer
        to the query than to every already-selected neighbor; backfill the
        remainder with the nearest pruned candidates.

        One pairwise-similarity matrix per call keeps the scan out of
        per-candidate numpy dispatch, which dominates build time otherwise.
        """
        if len(candidates) <= m:
            return [nid for _, nid in candidates]
        n = len(candidates)
        ids = np.fromiter((nid for _, nid in candidates), dtype=np.int64, count=n)
        sim_to_q = -np.fromiter((d for d, _ in candidates), dtype=np.float64, count=n)
        vecs = self._matrix[ids]
        pair_sim = vecs @ vecs.T
        max_sim_to_selected = np.full(n, -np.inf)
        selected: list[int] = []
        pruned: list[int] = []
        for i in range(n):
            if len(selected) >= m:
                break
            if sim_to_q[i] > max_sim_to_selected[i]:
                selected.append(i)
                np.maximum(max_sim_to_selected, pair_sim[i], out=max_sim_to_selected)
            else:
                pruned.append(i)
        for i in pruned:
            if len(selected) >= m:
                break
            selected.append(i)
        return [int(ids[i]) for i in selected]

    # --- search ---

    def _search_layer(
        self, q: np.ndarray, entry_points: list[int], layer: int, ef: int
    ) -> list[tuple[float, int]]:
        """Best-first search on one layer; returns (dist, node) ascending."""
        visited = bytearray(len(self.ids))
        matrix = self._matrix
        candidates: list[tuple[float, int]] = []
        best: list[tuple[float, int]] = []  # max-heap via negated dist
        for nid, d in zip(entry_points, -(matrix[entry_points] @ q)):
            visited[nid] = 1
            d = float(d)
            heapq.heappush(candidates, (d, nid))
            heapq.heappush(best, (-d, nid))
        while len(best) > ef:
            heapq.heappop(best)

        adj = self._layers[layer]
        push, pop = heapq.heappush, heapq.heappop
        while candidates:
            d, node = pop(candidates)
            if len(best) >= ef and d > -best[0][0]:
                break
            fresh = [n for n in adj[node] if not visited[n]]
            if not fresh:
                continue
            for n in fresh:
                visited[n] = 1
            fresh_d = -(matrix[fresh] @ q)
            bound = -best[0][0]
            full = len(best) >= ef
            for nid, dn in zip(fresh, fresh_d):
                dn = float(dn)
                if not full or dn < bound:
                    push(candidates, (dn, nid))
                    push(best, (-dn, nid))
                    if len(best) > ef:
                        pop(best)
                    bound = -best[0][0]
                    full = len(best) >= ef
        return sorted(((-nd, nid) for nd, nid in best), key=lambda t: (t[0], t[1]))

    def query(self, q: np.ndarray, k: int = 1) -> list[RetrievalHit]:
        if k < 1:
            raise InvalidConfig("k must be >= 1")
        if not self.ids:
            return []
        q32 = _check_query(q, self.dim)
        ef = max(self.params.ef_search, k)
        ep = [self._entry_point]
        for layer in range(self._max_level, 0, -1):
            ep = [nid for _, nid in self._search_layer(q32, ep, layer, 1)]
        found = self._search_layer(q32, ep, 0, ef)[:k]
        # Report scores in float64 to match the flat index convention.
        q64 = q32.astype(np.float64)
        hits = []
        for _, nid in found:
            score = float(self._matrix[nid].astype(np.float64) @ q64)
            hits.append((score, self.ids[nid]))
        hits.sort(key=lambda t: (-t[0], t[1]))
        return [
            RetrievalHit(chunk_id=cid, score=score, rank=r)
            for r, (score, cid) in enumerate(hits)
        ]


Index = FlatIndex | HnswIndex


def build_index(
    entries: list[IndexEntry],
    kind: str = "flat",
    params: HnswParams | None = None,
) -> Index:
    if kind == "flat":
        return FlatIndex(entries)
    if kind == "hnsw":
        return HnswIndex(entries, params)
    raise InvalidConfig(f"unknown index kind {kind!r}")


# --- persistence ---


def save_entries(entries: list[IndexEntry], path: str | Path) -> None:
    """Write vectors.bin atomically; round-trips are bit-exact."""
    ids, matrix = _validate_entries(entries)
    dim = matrix.shape[1] if ids else 0
    parts = [struct.pack("<II", FORMAT_VERSION, dim), struct.pack("<Q", len(ids))]
    for i, cid in enumerate(ids):
        id_bytes = cid.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise InvalidConfig(f"chunk id too long: {cid[:32]!r}...")
        parts.append(struct.pack("<H", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(matrix[i].astype("<f4").tobytes())
    payload = b"".join(parts)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    blob = MAGIC + payload + struct.pack("<I", crc)

    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_bytes(blob)
        tmp.replace(path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_entries(path: str | Path) -> list[IndexEntry]:
    """Read vectors.bin; structural damage raises CorruptFile, payload
    corruption raises ChecksumMismatch, never a partial result."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    min_len = len(MAGIC) + 4 + 4 + 8 + 4
    if len(blob) < min_len:
        raise CorruptFile(f"{path}: file too short")
    if blob[:4] != MAGIC:
        raise CorruptFile(f"{path}: bad magic")

    payload = blob[4:-4]
    pos = 0
    version, dim = struct.unpack_from("<II", payload, pos)
    pos += 8
    (count,) = struct.unpack_from("<Q", payload, pos)
    pos += 8
    if version != FORMAT_VERSION:
        raise CorruptFile(f"{path}: unsupported format version {version}")

    offsets: list[tuple[int, int, int]] = []  # (id_start, id_len, vec_start)
    vec_bytes = dim * 4
    for _ in range(count):
        if pos + 2 > len(payload):
            raise CorruptFile(f"{path}: truncated entry header")
        (id_len,) = struct.unpack_from("<H", payload, pos)
        pos += 2
        if pos + id_len + vec_bytes > len(payload):
            raise CorruptFile(f"{path}: truncated entry")
        offsets.append((pos, id_len, pos + id_len))
        pos += id_len + vec_bytes
    if pos != len(payload):
        raise CorruptFile(f"{path}: trailing bytes after last entry")

    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise ChecksumMismatch(f"{path}: CRC32 mismatch")

    entries = []
    for id_start, id_len, vec_start in offsets:
        try:
            cid = payload[id_start : id_start + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFile(f"{path}: undecodable chunk id") from exc
        vec = np.frombuffer(
            payload, dtype="<f4", count=dim, offset=vec_start
        ).astype(np.float32)
        entries.append(IndexEntry(chunk_id=cid, vector=vec))
    return entries
