"""Uniform client over completion-style backends.

Handles request chunking (batch_size prompts per request), bounded retry,
per-language max-token policy, stop sequences, over-generation truncation,
optional requests-per-minute throttling, and a deterministic mock backend
for tests and offline use.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol, Sequence

from .errors import BackendError, CompletionError, ConfigError, EmptyBatch
from .pipeline import word_count
from .prompts import RenderedPrompt
from .types import LangCode, SamplingParams

DEFAULT_MULTIPLIERS = {"ar": 8, "zh": 5, "rw": 5, "fr": 4, "es": 4}
DEFAULT_MULTIPLIER = 4


class BackendKind(str, Enum):
    HTTP_COMPLETION = "http_completion"
    MOCK = "mock"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind = BackendKind.MOCK
    endpoint: str = ""
    auth_token: str = ""
    batch_size: int = 20
    retries: int = 2
    timeout: float = 60.0
    requests_per_minute: int = 0  # 0 = unthrottled

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")


@dataclass(frozen=True)
class TokenPolicy:
    multiplier_by_lang: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_MULTIPLIERS))
    default_multiplier: int = DEFAULT_MULTIPLIER
    floor: int = 16

    def __post_init__(self):
        if any(m < 1 for m in self.multiplier_by_lang.values()) or self.default_multiplier < 1:
            raise ConfigError("token multipliers must be >= 1")

    def multiplier(self, lang: LangCode | str) -> int:
        code = lang.code if isinstance(lang, LangCode) else lang
        return self.multiplier_by_lang.get(code, self.default_multiplier)


def max_tokens_for(batch: Sequence[str], tgt_lang: LangCode | str,
                   policy: TokenPolicy = TokenPolicy()) -> int:
    """Largest source word count in the batch times the target-language multiplier."""
    if not batch:
        raise EmptyBatch("token budget needs at least one segment")
    longest = max(word_count(segment) for segment in batch)
    return max(longest * policy.multiplier(tgt_lang), policy.floor)


def translation_params(max_new_tokens: int = 256, num_hypotheses: int = 1) -> SamplingParams:
    """Completion-style translation defaults: single line, low temperature."""
    return SamplingParams(
        top_p=1.0, temperature=0.3, max_new_tokens=max_new_tokens,
        num_hypotheses=num_hypotheses, stop_sequences=("\n",),
    )


def extraction_params(max_new_tokens: int = 256) -> SamplingParams:
    """Terminology extraction returns numbered lines, so the newline stop is off."""
    return SamplingParams(top_p=1.0, temperature=0.0, max_new_tokens=max_new_tokens,
                          stop_sequences=())


class Backend(Protocol):
    def complete(self, prompts: list[str], params: SamplingParams) -> list[str]: ...


class MockBackend:
    """Deterministic offline backend: a pure function of (prompt, params).

    The default responder echoes the last non-empty prompt line uppercased.
    ``fail_times`` makes the first N requests raise, for retry tests.
    """

    def __init__(self, responder: Callable[[str, SamplingParams], str] | None = None,
                 fail_times: int = 0):
        self.responder = responder or self._echo_upper
        self.fail_times = fail_times
        self.requests = 0

    @staticmethod
    def _echo_upper(prompt: str, params: SamplingParams) -> str:
        lines = [line for line in prompt.splitlines() if line.strip()]
        return lines[-1].upper() if lines else ""

    def complete(self, prompts: list[str], params: SamplingParams) -> list[str]:
        self.requests += 1
        if self.requests <= self.fail_times:
            raise BackendError(f"scripted failure {self.requests}")
        return [self.responder(p, params) for p in prompts]


class HttpCompletionBackend:
    """POST {"prompt": [...], "max_tokens", "temperature", "top_p", "stop"}
    -> {"text": [...]}; scalars are accepted for single-prompt requests."""

    def __init__(self, endpoint: str, auth_token: str = "", timeout: float = 60.0):
        if not endpoint:
            raise ConfigError("http backend requires an endpoint")
        self.endpoint = endpoint
        self.auth_token = auth_token
        self.timeout = timeout

    def complete(self, prompts: list[str], params: SamplingParams) -> list[str]:
        import httpx

        payload = {
            "prompt": prompts if len(prompts) > 1 else prompts[0],
            "max_tokens": params.max_new_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "stop": list(params.stop_sequences),
        }
        headers = {"Authorization": f"Bearer {self.auth_token}"} if self.auth_token else {}
        try:
            resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            text = resp.json()["text"]
        except Exception as exc:
            raise BackendError(f"completion request failed: {exc}") from exc
        texts = text if isinstance(text, list) else [text]
        if len(texts) != len(prompts):
            raise BackendError(f"backend returned {len(texts)} texts for {len(prompts)} prompts")
        return [str(t) for t in texts]


class TokenBucket:
    """Requests-per-minute throttle; acquire() blocks until a slot is free."""

    def __init__(self, requests_per_minute: int):
        self.capacity = max(1, requests_per_minute)
        self.tokens = float(self.capacity)
        self.rate = self.capacity / 60.0
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


def make_backend(cfg: BackendConfig) -> Backend:
    if cfg.kind is BackendKind.MOCK:
        return MockBackend()
    return HttpCompletionBackend(cfg.endpoint, cfg.auth_token, cfg.timeout)


class Gateway:
    """Shareable front door to a completion backend."""

    def __init__(self, backend: Backend, batch_size: int = 20, retries: int = 2,
                 requests_per_minute: int = 0):
        if batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        self.backend = backend
        self.batch_size = batch_size
        self.retries = retries
        self.bucket = TokenBucket(requests_per_minute) if requests_per_minute else None

    @classmethod
    def from_config(cls, cfg: BackendConfig) -> "Gateway":
        return cls(make_backend(cfg), batch_size=cfg.batch_size, retries=cfg.retries,
                   requests_per_minute=cfg.requests_per_minute)

    def complete_batch(self, prompts: Sequence[RenderedPrompt | str],
                       params: SamplingParams) -> list[str]:
        """One completion per prompt, order preserving across chunk splits.

        Failed chunks are retried up to ``retries`` times; if any chunk is
        still failing, a CompletionError carries every per-item outcome.
        """
        texts = [p.text if isinstance(p, RenderedPrompt) else p for p in prompts]
        completed: dict[int, str] = {}
        failed: dict[int, str] = {}
        for start in range(0, len(texts), self.batch_size):
            chunk = texts[start : start + self.batch_size]
            error: str | None = None
            for _attempt in range(self.retries + 1):
                if self.bucket is not None:
                    self.bucket.acquire()
                try:
                    outputs = self.backend.complete(chunk, params)
                    if len(outputs) != len(chunk):
                        raise BackendError(
                            f"backend returned {len(outputs)} completions for {len(chunk)}"
                        )
                except BackendError as exc:
                    error = str(exc)
                    continue
                for offset, text in enumerate(outputs):
                    completed[start + offset] = text
                error = None
                break
            if error is not None:
                for offset in range(len(chunk)):
                    failed[start + offset] = error
        if failed:
            raise CompletionError(completed, failed)
        return [completed[i] for i in range(len(texts))]


class TruncateMode(str, Enum):
    FIRST_LINE = "first_line"
    NONE = "none"


def truncate_overgeneration(completion: str, mode: TruncateMode = TruncateMode.FIRST_LINE) -> str:
    """Keep text up to the first newline (trimmed). A completion that begins
    with a newline therefore truncates to the empty string; callers choosing
    a newline stop accept that hazard."""
    if mode is TruncateMode.NONE:
        return completion
    return completion.split("\n", 1)[0].strip()
