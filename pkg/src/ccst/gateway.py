"""Thin client for chat-completion backends, plus a deterministic mock.

Two wire formats are spoken: an Ollama-style /api/generate endpoint and an
OpenAI-compatible /v1/chat/completions endpoint. One call in, one request
out; retries and queueing belong to the caller.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, replace
from typing import Mapping

import httpx

DEFAULT_BASE_URL = "http://localhost:11434"
DEFAULT_MODEL = "llama3"

ENV_URL = "CCST_LLM_URL"
ENV_MODEL = "CCST_LLM_MODEL"


class GatewayError(Exception):
    pass


class TimeoutError(GatewayError):  # noqa: A001 - qualified use is ccst.gateway.TimeoutError
    """The provider did not answer within the configured timeout."""


class TransportError(GatewayError):
    """The provider could not be reached at all."""


class ProviderError(GatewayError):
    """The provider answered, but not with a usable completion."""


@dataclass(frozen=True)
class LLMConfig:
    base_url: str = DEFAULT_BASE_URL
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.7
    timeout: float = 60.0
    max_tokens: int = 512
    provider: str = "ollama"  # or "openai"

    def __post_init__(self) -> None:
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.provider not in ("ollama", "openai"):
            raise ValueError(f"unknown provider {self.provider!r}")


def config_from_env(base: LLMConfig | None = None, env: Mapping[str, str] | None = None) -> LLMConfig:
    """Overlay CCST_LLM_URL / CCST_LLM_MODEL on a config."""
    source = os.environ if env is None else env
    config = base or LLMConfig()
    if source.get(ENV_URL):
        config = replace(config, base_url=source[ENV_URL])
    if source.get(ENV_MODEL):
        config = replace(config, model_name=source[ENV_MODEL])
    return config


@dataclass(frozen=True)
class GenerationResult:
    text: str
    latency_ms: float
    model_name: str


def _post(url: str, payload: dict, timeout: float) -> httpx.Response:
    try:
        response = httpx.post(url, json=payload, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise TimeoutError(f"no reply from {url} within {timeout}s") from exc
    except httpx.TransportError as exc:
        raise TransportError(f"could not reach {url}: {exc}") from exc
    if response.status_code // 100 != 2:
        raise ProviderError(f"{url} answered {response.status_code}: {response.text[:200]}")
    return response


def _extract(response: httpx.Response, *path: str | int) -> str:
    try:
        node = response.json()
        for key in path:
            node = node[key]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"malformed provider response: {exc}") from exc
    if not isinstance(node, str):
        raise ProviderError("completion text is not a string")
    return node


def generate(prompt: str, config: LLMConfig) -> GenerationResult:
    """One completion for one prompt. Exactly one provider request."""
    started = time.perf_counter()
    if config.provider == "ollama":
        response = _post(
            f"{config.base_url}/api/generate",
            {
                "model": config.model_name,
                "prompt": prompt,
                "stream": False,
                "options": {
                    "temperature": config.temperature,
                    "num_predict": config.max_tokens,
                },
            },
            config.timeout,
        )
        text = _extract(response, "response")
    else:
        response = _post(
            f"{config.base_url}/v1/chat/completions",
            {
                "model": config.model_name,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": config.temperature,
                "max_tokens": config.max_tokens,
            },
            config.timeout,
        )
        text = _extract(response, "choices", 0, "message", "content")
    latency_ms = (time.perf_counter() - started) * 1000.0
    return GenerationResult(text=text, latency_ms=latency_ms, model_name=config.model_name)


def health_check(config: LLMConfig) -> bool:
    """True only when the backend is up and serves the configured model."""
    try:
        if config.provider == "ollama":
            response = httpx.get(f"{config.base_url}/api/tags", timeout=config.timeout)
            if response.status_code // 100 != 2:
                return False
            models = response.json().get("models", [])
            names = {m.get("name", "") for m in models}
            return any(
                name == config.model_name or name.split(":")[0] == config.model_name
                for name in names
            )
        response = httpx.get(f"{config.base_url}/v1/models", timeout=config.timeout)
        if response.status_code // 100 != 2:
            return False
        ids = {m.get("id", "") for m in response.json().get("data", [])}
        return config.model_name in ids
    except (httpx.HTTPError, ValueError, AttributeError, TypeError):
        return False


class MockProvider:
    """Deterministic stand-in for a live backend.

    Looks up canned completions by the sha256 of the prompt; unknown
    prompts get a synthesized three-recommendation reply that still varies
    with the prompt, so coalescing and replay behavior stay observable.
    """

    def __init__(self, fixtures: Mapping[str, str] | None = None):
        self.fixtures = dict(fixtures or {})
        self.calls: list[str] = []

    @staticmethod
    def key_for(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def generate(self, prompt: str) -> GenerationResult:
        self.calls.append(prompt)
        key = self.key_for(prompt)
        text = self.fixtures.get(key)
        if text is None:
            ref = key[:8]
            text = (
                f"1. [Ask to self-explain] Can you walk me through your thinking "
                f"on this step? (ref {ref})\n"
                f"2. [Check the equation] What does each side of the equation "
                f"look like after that move? (ref {ref})\n"
                f"3. [Encourage effort] You're working hard on this one. What "
                f"feels like the next thing to try? (ref {ref})"
            )
        return GenerationResult(text=text, latency_ms=0.0, model_name="mock")
