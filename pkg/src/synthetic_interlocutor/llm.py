"""Generation providers: local-server HTTP clients and offline stubs.

The HTTP clients stream over SSE from OpenAI-compatible endpoints
(`/v1/chat/completions` for message bundles, `/v1/completions` for raw
instruction blocks). Generation is never retried here: a half-finished
answer is returned as a partial result and the dialogue layer decides
what to do with it.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

import httpx

from .errors import InvalidConfig, LlmUnavailable, ProviderError
from .prompts import PromptBundle

OnToken = Callable[[str], None]


@dataclass
class GenerationParams:
    model_id: str = "mistral:7b"
    temperature: float = 0.7
    max_tokens: int = 512
    seed: int | None = None
    stop: list[str] | None = None
    timeout_ms: int = 120000

    def validate(self) -> None:
        if self.max_tokens < 1:
            raise InvalidConfig("max_tokens must be >= 1")
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise InvalidConfig("temperature must be finite and >= 0")

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
            "stop": self.stop,
            "timeout_ms": self.timeout_ms,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GenerationParams":
        params = cls(**obj)
        params.validate()
        return params


@dataclass
class GenerationResult:
    text: str
    finish_reason: str  # stop | length | error
    token_events: int
    latency_ms: float


@dataclass
class LlmConfig:
    provider: str = "echo_stub"  # echo_stub | scripted_stub | http_chat | http_completions
    base_url: str | None = None
    params: GenerationParams = field(default_factory=GenerationParams)
    script: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.provider not in ("echo_stub", "scripted_stub", "http_chat", "http_completions"):
            raise InvalidConfig(f"unknown llm provider {self.provider!r}")
        if self.provider.startswith("http") and not self.base_url:
            raise InvalidConfig("base_url required for http llm providers")

    def with_env_overrides(self) -> "LlmConfig":
        base_url = os.environ.get("SI_LLM_BASE_URL", self.base_url)
        model = os.environ.get("SI_LLM_MODEL")
        cfg = LlmConfig(
            provider=self.provider,
            base_url=base_url,
            params=GenerationParams(**self.params.to_json()),
            script=list(self.script),
        )
        if model:
            cfg.params.model_id = model
        if base_url and base_url != self.base_url and not self.provider.startswith("http"):
            cfg.provider = "http_chat"
        return cfg


def _emit_increments(
    increments: list[str], params: GenerationParams, on_token: OnToken | None
) -> GenerationResult:
    """Shared stub behavior: each increment counts as one budget token."""
    start = time.monotonic()
    emitted = increments[: params.max_tokens]
    parts = []
    for inc in emitted:
        parts.append(inc)
        if on_token:
            on_token(inc)
    text = "".join(parts)
    finish = "length" if len(emitted) < len(increments) else "stop"
    return GenerationResult(
        text=text,
        finish_reason=finish,
        token_events=len(emitted),
        latency_ms=(time.monotonic() - start) * 1000.0,
    )


class EchoStubLlm:
    """Deterministic test double: ECHO[context|question] in three increments."""

    def generate(
        self,
        bundle: PromptBundle,
        params: GenerationParams,
        on_token: OnToken | None = None,
    ) -> GenerationResult:
        params.validate()
        increments = ["ECHO[", f"{bundle.context}|{bundle.question}", "]"]
        return _emit_increments(increments, params, on_token)


class ScriptedStubLlm:
    """Plays back a fixed list of responses, one per call, repeating the last.

    `hold` (an optional threading.Event) keeps a generation in flight until
    set, which lets tests provoke the busy-session path deterministically.
    """

    def __init__(self, script: list[str], hold: threading.Event | None = None):
        if not script:
            raise InvalidConfig("scripted stub needs at least one response")
        self.script = list(script)
        self.calls = 0
        self.hold = hold
        self._lock = threading.Lock()

    def generate(
        self,
        bundle: PromptBundle,
        params: GenerationParams,
        on_token: OnToken | None = None,
    ) -> GenerationResult:
        params.validate()
        with self._lock:
            text = self.script[min(self.calls, len(self.script) - 1)]
            self.calls += 1
        # word-level increments so streaming consumers see several events
        words = text.split(" ")
        increments = [w + " " for w in words[:-1]] + [words[-1]]
        start = time.monotonic()
        emitted = increments[: params.max_tokens]
        parts: list[str] = []
        for i, inc in enumerate(emitted):
            parts.append(inc)
            if on_token:
                on_token(inc)
            if i == 0 and self.hold is not None:
                self.hold.wait()
        finish = "length" if len(emitted) < len(increments) else "stop"
        return GenerationResult(
            text="".join(parts),
            finish_reason=finish,
            token_events=len(emitted),
            latency_ms=(time.monotonic() - start) * 1000.0,
        )


class _HttpStreamingLlm:
    """Common SSE plumbing for the OpenAI-compatible endpoints."""

    endpoint = ""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        if not base_url:
            raise InvalidConfig("base_url required")
        self.base_url = base_url.rstrip("/")
        self._client = client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def _payload(self, bundle: PromptBundle, params: GenerationParams) -> dict:
        raise NotImplementedError

    def _delta(self, obj: dict) -> tuple[str | None, str | None]:
        raise NotImplementedError

    def generate(
        self,
        bundle: PromptBundle,
        params: GenerationParams,
        on_token: OnToken | None = None,
    ) -> GenerationResult:
        params.validate()
        client = self._client or httpx.Client()
        timeout = httpx.Timeout(params.timeout_ms / 1000.0)
        url = f"{self.base_url}{self.endpoint}"
        start = time.monotonic()
        parts: list[str] = []
        finish: str | None = None
        try:
            with client.stream(
                "POST", url, json=self._payload(bundle, params), timeout=timeout
            ) as resp:
                if resp.status_code != 200:
                    body = resp.read().decode("utf-8", "replace")
                    raise ProviderError(
                        f"generation request rejected ({resp.status_code})",
                        resp.status_code,
                        body,
                    )
                for line in resp.iter_lines():
                    if not line.startswith("data:"):
                        continue
                    data = line[len("data:") :].strip()
                    if data == "[DONE]":
                        break
                    try:
                        obj = json.loads(data)
                    except json.JSONDecodeError:
                        continue
                    inc, reason = self._delta(obj)
                    if inc:
                        parts.append(inc)
                        if on_token:
                            on_token(inc)
                    if reason:
                        finish = reason
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            if not parts:
                raise LlmUnavailable(f"no tokens from {url}: {exc}") from exc
            return GenerationResult(
                text="".join(parts),
                finish_reason="error",
                token_events=len(parts),
                latency_ms=(time.monotonic() - start) * 1000.0,
            )
        finally:
            if self._client is None:
                client.close()
        if not parts:
            raise LlmUnavailable(f"{url} returned an empty stream")
        return GenerationResult(
            text="".join(parts),
            finish_reason=finish or "stop",
            token_events=len(parts),
            latency_ms=(time.monotonic() - start) * 1000.0,
        )


class HttpChatLlm(_HttpStreamingLlm):
    endpoint = "/v1/chat/completions"

    def _payload(self, bundle: PromptBundle, params: GenerationParams) -> dict:
        if bundle.rendered_messages is None:
            raise InvalidConfig("chat endpoint needs a chat_messages bundle")
        payload = {
            "model": params.model_id,
            "messages": [
                {"role": role, "content": content}
                for role, content in bundle.rendered_messages
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stream": True,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        if params.stop:
            payload["stop"] = params.stop
        return payload

    def _delta(self, obj: dict) -> tuple[str | None, str | None]:
        choices = obj.get("choices") or [{}]
        choice = choices[0]
        return choice.get("delta", {}).get("content"), choice.get("finish_reason")


class HttpCompletionsLlm(_HttpStreamingLlm):
    endpoint = "/v1/completions"

    def _payload(self, bundle: PromptBundle, params: GenerationParams) -> dict:
        if bundle.rendered_raw is None:
            raise InvalidConfig("completions endpoint needs a raw_inst bundle")
        payload = {
            "model": params.model_id,
            "prompt": bundle.rendered_raw,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stream": True,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        if params.stop:
            payload["stop"] = params.stop
        return payload

    def _delta(self, obj: dict) -> tuple[str | None, str | None]:
        choices = obj.get("choices") or [{}]
        choice = choices[0]
        return choice.get("text"), choice.get("finish_reason")


def render_mode_for(cfg: LlmConfig) -> str:
    """Chat endpoints get message bundles; everything else gets the raw block."""
    return "raw_inst" if cfg.provider == "http_completions" else "chat_messages"


def make_llm(cfg: LlmConfig, client: httpx.Client | None = None):
    cfg.validate()
    if cfg.provider == "echo_stub":
        return EchoStubLlm()
    if cfg.provider == "scripted_stub":
        return ScriptedStubLlm(cfg.script or ["I have nothing scripted to say."])
    if cfg.provider == "http_chat":
        return HttpChatLlm(cfg.base_url, client=client)
    return HttpCompletionsLlm(cfg.base_url, client=client)
