"""Service configuration: TOML file plus environment overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .embedding import EmbedderConfig
from .errors import InvalidConfig
from .llm import GenerationParams, LlmConfig
from .retrieval import RetrievalConfig


@dataclass
class GuardConfig:
    enabled: bool = True
    rules: list[str] = field(
        default_factory=lambda: ["R1", "R2", "R3", "R4"]
    )
    lexicon_path: str | None = None
    max_regens: int = 2


@dataclass
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8787"
    data_dir: str = "./data"
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    guards: GuardConfig = field(default_factory=GuardConfig)
    prompt_template_path: str | None = None
    cors_allowed_origins: list[str] = field(default_factory=list)
    index_kind: str = "flat"
    ui_dir: str | None = None

    @property
    def host(self) -> str:
        return self.listen_addr.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.listen_addr.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise InvalidConfig(f"bad listen_addr {self.listen_addr!r}") from None

    def validate(self) -> None:
        _ = self.port
        self.embedder.validate()
        self.llm.validate()
        self.retrieval.validate()
        if self.index_kind not in ("flat", "hnsw"):
            raise InvalidConfig(f"unknown index_kind {self.index_kind!r}")


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Load TOML config from path, $SI_CONFIG, or defaults; env vars win."""
    cfg = ServiceConfig()
    path = path or os.environ.get("SI_CONFIG")
    if path:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
        cfg = _from_toml(raw)
    cfg.embedder = cfg.embedder.with_env_overrides()
    cfg.llm = cfg.llm.with_env_overrides()
    cfg.validate()
    return cfg


def _from_toml(raw: dict) -> ServiceConfig:
    cfg = ServiceConfig()
    cfg.listen_addr = raw.get("listen_addr", cfg.listen_addr)
    cfg.data_dir = raw.get("data_dir", cfg.data_dir)
    cfg.cors_allowed_origins = raw.get("cors_allowed_origins", [])
    cfg.index_kind = raw.get("index_kind", cfg.index_kind)
    cfg.ui_dir = raw.get("ui_dir")

    emb = raw.get("embedder", {})
    cfg.embedder = EmbedderConfig(
        provider=emb.get("provider", "deterministic_stub"),
        base_url=emb.get("base_url"),
        model_id=emb.get("model_id", "stub-32"),
        dim=emb.get("dim", 32),
        batch_size=emb.get("batch_size", 32),
        timeout_ms=emb.get("timeout_ms", 30000),
        retries=emb.get("retries", 2),
    )

    llm = raw.get("llm", {})
    params = GenerationParams(
        model_id=llm.get("model_id", "mistral:7b"),
        temperature=llm.get("temperature", 0.7),
        max_tokens=llm.get("max_tokens", 512),
        seed=llm.get("seed"),
        stop=llm.get("stop"),
        timeout_ms=llm.get("timeout_ms", 120000),
    )
    cfg.llm = LlmConfig(
        provider=llm.get("provider", "echo_stub"),
        base_url=llm.get("base_url"),
        params=params,
        script=llm.get("script", []),
    )

    ret = raw.get("retrieval", {})
    cfg.retrieval = RetrievalConfig(
        k=ret.get("k", 1),
        min_score=ret.get("min_score", -1.0),
        context_separator=ret.get("context_separator", "\n---\n"),
        query_mode=ret.get("query_mode", "last_message_only"),
        history_window_turns=ret.get("history_window_turns", 0),
    )

    g = raw.get("guards", {})
    cfg.guards = GuardConfig(
        enabled=g.get("enabled", True),
        rules=g.get("rules", ["R1", "R2", "R3", "R4"]),
        lexicon_path=g.get("lexicon_path"),
        max_regens=g.get("max_regens", 2),
    )

    prompt = raw.get("prompt", {})
    cfg.prompt_template_path = prompt.get("template_path")
    return cfg
