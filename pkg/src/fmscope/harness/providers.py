"""LLM provider clients: a generic chat-completions client and an offline mock."""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import httpx

from ..analysis import AoKind
from ..blueprint import token_count
from ..model import FmError


class ProviderConfigError(FmError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    model_id: str
    endpoint: str = ""
    api_model: str = ""  # name sent on the wire; defaults to model_id
    family: str = "general"  # "general" or "reasoning"
    adapter: str = "bearer"
    auth_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int | None = None
    request_timeout: float = 600.0
    # some reasoning endpoints reject an explicit temperature; they decode at their fixed default
    send_temperature: bool = True
    extra_body: Mapping = field(default_factory=dict)

    @classmethod
    def from_json(cls, model_id: str, data: Mapping) -> "ProviderConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known) - {"context_window", "type", "display_name"}
        if unknown:
            raise ProviderConfigError(f"{model_id}: unknown config keys {sorted(unknown)}")
        return cls(model_id=model_id, **{k: v for k, v in known.items() if k != "model_id"})


def load_model_configs(path: str | Path) -> list[ProviderConfig]:
    """Read a JSON object keyed by model id."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ProviderConfigError("model config must be a JSON object keyed by model id")
    return [ProviderConfig.from_json(mid, entry) for mid, entry in data.items()]


@dataclass(frozen=True)
class LlmExchange:
    request: Mapping
    response_text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    wall_time: float = 0.0
    status: str = "ok"  # ok | timeout | http_error
    http_code: int | None = None

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0 or self.wall_time < 0:
            raise ValueError("token counts and wall time must be non-negative")

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class Provider(Protocol):
    def complete(self, config: ProviderConfig, system: str, user: str, *,
                 blueprint: str, ao: AoKind) -> LlmExchange: ...


def chat_payload(config: ProviderConfig, system: str, user: str) -> dict:
    payload: dict = {"model": config.api_model or config.model_id}
    if config.adapter == "anthropic":
        # native messages API: system prompt is top-level, max_tokens is mandatory
        payload["system"] = system
        payload["messages"] = [{"role": "user", "content": user}]
        payload["max_tokens"] = config.max_output_tokens or 8192
    else:
        payload["messages"] = [{"role": "system", "content": system},
                               {"role": "user", "content": user}]
        if config.max_output_tokens:
            payload["max_tokens"] = config.max_output_tokens
    if config.send_temperature:
        payload["temperature"] = config.temperature
    payload.update(config.extra_body)
    return payload


def _auth_headers(config: ProviderConfig) -> dict[str, str]:
    if not config.auth_env:
        return {}
    key = os.environ.get(config.auth_env)
    if not key:
        raise ProviderConfigError(f"{config.model_id}: environment variable {config.auth_env} is not set")
    if config.adapter == "bearer":
        return {"Authorization": f"Bearer {key}"}
    if config.adapter == "anthropic":
        return {"x-api-key": key, "anthropic-version": "2023-06-01"}
    if config.adapter == "google":
        return {"x-goog-api-key": key}
    raise ProviderConfigError(f"{config.model_id}: unknown adapter {config.adapter!r}")


def _response_text(body: Mapping) -> str:
    if "choices" in body:
        msg = body["choices"][0].get("message") or {}
        return msg.get("content") or ""
    if "content" in body and isinstance(body["content"], list):
        return "".join(part.get("text", "") for part in body["content"] if isinstance(part, dict))
    return ""


def _usage(body: Mapping) -> tuple[int, int]:
    usage = body.get("usage") or {}
    prompt = usage.get("prompt_tokens", usage.get("input_tokens", 0)) or 0
    completion = usage.get("completion_tokens", usage.get("output_tokens", 0)) or 0
    return int(prompt), int(completion)


class HttpProvider:
    """Chat-completions style client; one request per call, no retries."""

    def __init__(self, client: httpx.Client | None = None):
        self.client = client or httpx.Client()

    def check(self, config: ProviderConfig) -> None:
        if not config.endpoint:
            raise ProviderConfigError(f"{config.model_id}: no endpoint configured")
        _auth_headers(config)

    def complete(self, config: ProviderConfig, system: str, user: str, *,
                 blueprint: str = "", ao: AoKind | None = None) -> LlmExchange:
        payload = chat_payload(config, system, user)
        headers = _auth_headers(config)
        start = time.perf_counter()
        try:
            resp = self.client.post(config.endpoint, json=payload, headers=headers,
                                    timeout=config.request_timeout)
        except httpx.TimeoutException:
            return LlmExchange(payload, "", wall_time=time.perf_counter() - start, status="timeout")
        except httpx.HTTPError as exc:
            return LlmExchange(payload, str(exc), wall_time=time.perf_counter() - start,
                               status="http_error")
        elapsed = time.perf_counter() - start
        if resp.status_code >= 400:
            return LlmExchange(payload, resp.text, wall_time=elapsed, status="http_error",
                               http_code=resp.status_code)
        try:
            body = resp.json()
        except ValueError:
            return LlmExchange(payload, resp.text, wall_time=elapsed, status="http_error",
                               http_code=resp.status_code)
        prompt, completion = _usage(body)
        return LlmExchange(payload, _response_text(body), prompt, completion, elapsed,
                           "ok", resp.status_code)


class MockProvider:
    """Canned responses keyed by (model_id, blueprint name, AO code).

    Token counts are whitespace token counts of the prompts and the reply;
    wall time is zero. A missing fixture yields an ``http_error`` exchange.
    """

    def __init__(self, fixtures: Mapping[tuple[str, str, str], str]):
        self.fixtures = dict(fixtures)
        self.calls: list[tuple[str, str, str]] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "MockProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = data["responses"] if isinstance(data, dict) else data
        return cls({(e["model_id"], e["blueprint"], e["ao"]): e["response"] for e in entries})

    def check(self, config: ProviderConfig) -> None:
        pass

    def complete(self, config: ProviderConfig, system: str, user: str, *,
                 blueprint: str, ao: AoKind) -> LlmExchange:
        key = (config.model_id, blueprint, ao.code)
        self.calls.append(key)
        payload = chat_payload(config, system, user)
        prompt_tokens = token_count(system) + token_count(user)
        if key not in self.fixtures:
            return LlmExchange(payload, "", prompt_tokens, 0, 0.0, "http_error", 404)
        text = self.fixtures[key]
        return LlmExchange(payload, text, prompt_tokens, token_count(text), 0.0, "ok", 200)
