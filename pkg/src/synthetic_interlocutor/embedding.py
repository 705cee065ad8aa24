"""Embedding providers: an OpenAI-compatible HTTP client and an offline stub.

All vectors that leave this module are float32 and L2-normalized, so the
index can score cosine similarity as a plain dot product.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass

import httpx
import numpy as np

from .errors import DimMismatch, EmbedderUnavailable, InvalidConfig, ProviderError

NORM_TOL = 1e-5


@dataclass
class EmbedderConfig:
    provider: str = "deterministic_stub"  # or "http_openai_compatible"
    base_url: str | None = None
    model_id: str = "stub-32"
    dim: int = 32  # stub only; HTTP providers report their own dim
    batch_size: int = 32
    timeout_ms: int = 30000
    retries: int = 2

    def validate(self) -> None:
        if self.provider not in ("http_openai_compatible", "deterministic_stub"):
            raise InvalidConfig(f"unknown embedding provider {self.provider!r}")
        if self.provider == "http_openai_compatible" and not self.base_url:
            raise InvalidConfig("base_url required for the http provider")
        if self.batch_size <= 0:
            raise InvalidConfig("batch_size must be > 0")

    def with_env_overrides(self) -> "EmbedderConfig":
        base_url = os.environ.get("SI_EMBED_BASE_URL", self.base_url)
        model_id = os.environ.get("SI_EMBED_MODEL", self.model_id)
        cfg = EmbedderConfig(**{**self.__dict__, "base_url": base_url, "model_id": model_id})
        if base_url and base_url != self.base_url:
            cfg.provider = "http_openai_compatible"
        return cfg


def normalize(values: np.ndarray) -> np.ndarray:
    """L2-normalize to float32; rejects zero and non-finite vectors."""
    arr = np.asarray(values, dtype=np.float32)
    if not np.all(np.isfinite(arr)):
        raise ProviderError("embedding contains NaN or Inf")
    norm = float(np.linalg.norm(arr.astype(np.float64)))
    if norm == 0.0:
        raise ProviderError("embedding is the zero vector")
    return (arr.astype(np.float64) / norm).astype(np.float32)


def _text_seed(text: str) -> int:
    """64-bit hash of the UTF-8 bytes, stable across platforms and runs."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stub_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic pseudo-embedding: Philox keyed on a hash of the text.

    Same text and dim always produce bitwise-identical float32 vectors.
    """
    if dim <= 0:
        raise InvalidConfig("dim must be > 0")
    rng = np.random.Generator(np.random.Philox(key=_text_seed(text)))
    values = rng.uniform(-1.0, 1.0, size=dim)
    return normalize(values)


class StubEmbedder:
    """Offline deterministic embedder for tests and benchmarks."""

    def __init__(self, dim: int = 32, model_id: str = "stub-32"):
        self.dim = dim
        self.model_id = model_id

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        _check_texts(texts)
        return [stub_embed(t, self.dim) for t in texts]


class HttpEmbedder:
    """Client for a local server exposing POST {base_url}/v1/embeddings.

    Retries timeouts and 5xx responses with exponential backoff (base 250 ms,
    doubling); 4xx responses fail immediately. Response rows are re-sorted by
    their `index` field before being returned in input order.
    """

    RETRY_BASE_S = 0.25

    def __init__(self, cfg: EmbedderConfig, client: httpx.Client | None = None):
        cfg.validate()
        if cfg.provider != "http_openai_compatible":
            raise InvalidConfig("HttpEmbedder requires the http provider")
        self.cfg = cfg
        self._client = client or httpx.Client(timeout=cfg.timeout_ms / 1000.0)

    def close(self) -> None:
        self._client.close()

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        _check_texts(texts)
        out: list[np.ndarray] = []
        for i in range(0, len(texts), self.cfg.batch_size):
            out.extend(self._embed_one_batch(texts[i : i + self.cfg.batch_size]))
        dims = {v.shape[0] for v in out}
        if len(dims) > 1:
            raise DimMismatch(f"provider returned inconsistent dims: {sorted(dims)}")
        return out

    def _embed_one_batch(self, texts: list[str]) -> list[np.ndarray]:
        url = f"{self.cfg.base_url.rstrip('/')}/v1/embeddings"
        payload = {"model": self.cfg.model_id, "input": texts}
        last_exc: Exception | None = None
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                time.sleep(self.RETRY_BASE_S * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(url, json=payload)
            except (httpx.TimeoutException, httpx.ConnectError, httpx.TransportError) as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = ProviderError(
                    f"server error {resp.status_code}", resp.status_code, resp.text
                )
                continue
            if resp.status_code >= 400:
                raise ProviderError(
                    f"embedding request rejected ({resp.status_code})",
                    resp.status_code,
                    resp.text,
                )
            return self._parse(resp.json(), len(texts))
        raise EmbedderUnavailable(
            f"embedding provider at {self.cfg.base_url} unavailable: {last_exc}"
        )

    @staticmethod
    def _parse(body: dict, expected: int) -> list[np.ndarray]:
        try:
            rows = sorted(body["data"], key=lambda r: r["index"])
            vectors = [np.asarray(r["embedding"], dtype=np.float32) for r in rows]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != expected:
            raise ProviderError(
                f"expected {expected} embeddings, got {len(vectors)}"
            )
        dims = {v.shape[0] for v in vectors}
        if len(dims) != 1:
            raise DimMismatch(f"provider returned inconsistent dims: {sorted(dims)}")
        return [normalize(v) for v in vectors]


def _check_texts(texts: list[str]) -> None:
    if not texts:
        raise InvalidConfig("embed_batch requires at least one text")
    if any(not t for t in texts):
        raise InvalidConfig("embed_batch texts must be non-empty")


def make_embedder(cfg: EmbedderConfig, client: httpx.Client | None = None):
    cfg.validate()
    if cfg.provider == "deterministic_stub":
        return StubEmbedder(dim=cfg.dim, model_id=cfg.model_id)
    return HttpEmbedder(cfg, client=client)
