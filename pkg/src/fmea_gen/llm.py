"""Completion gateway: mock providers for offline work plus a remote HTTP client.

Every completion is tagged with a stable hash of the rendered prompt so runs
can be audited and replayed. Mock providers are deterministic functions of the
prompt (and config), never of wall clock or call order.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field

import httpx

from .errors import ProviderHttpError, ProviderTimeoutError, ProviderUnavailableError, UnknownExampleError
from .prompting import PromptSpec
from .textutil import fnv1a_64, stable_seed

MOCK_KINDS = ("mock_echo_shot", "mock_lookup", "mock_noise")
PROVIDER_KINDS = MOCK_KINDS + ("remote_http",)

# Fixed refusal used by mock_echo_shot when the prompt carries no shots. It
# deliberately contains no block header, so downstream parsing fails the way a
# lost model answer would.
_NO_SHOT_TEXT = "I do not have enough context to produce the requested section."

_GIBBERISH_WORDS = (
    "lorem", "ipsum", "dolor", "amet", "consectetur", "adipiscing", "elit",
    "vivamus", "fermentum", "porta", "tellus", "auctor", "rutrum", "magna",
)

# One gate across all providers so a misconfigured fanout cannot stampede.
_GLOBAL_MAX_CONCURRENCY = 8
_global_gate = threading.BoundedSemaphore(_GLOBAL_MAX_CONCURRENCY)


@dataclass
class ProviderConfig:
    provider_id: str
    kind: str
    url: str | None = None
    token: str | None = None
    timeout: float = 30.0
    max_retries: int = 2
    backoff_base: float = 0.5
    backoff_factor: float = 2.0
    max_concurrency: int = 4
    max_tokens: int = 1024
    # mock_lookup only: query input text -> canned output block
    lookup_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote_http" and not self.url:
            raise ValueError("remote_http provider requires a url")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        self._gate = threading.BoundedSemaphore(self.max_concurrency)


@dataclass(frozen=True)
class LlmResponse:
    text: str
    provider_id: str
    prompt_hash: str
    attempts: int


def prompt_hash(prompt: PromptSpec) -> str:
    """64-bit FNV-1a of the rendered prompt, as 16 hex digits."""
    return format(fnv1a_64(prompt.rendered.encode("utf-8")), "016x")


def complete(prompt: PromptSpec, config: ProviderConfig) -> LlmResponse:
    """Run one completion under the provider and global concurrency gates."""
    digest = prompt_hash(prompt)
    with _global_gate, config._gate:
        if config.kind == "mock_echo_shot":
            text, attempts = _echo_shot(prompt), 1
        elif config.kind == "mock_lookup":
            text, attempts = _lookup(prompt, config), 1
        elif config.kind == "mock_noise":
            text, attempts = _noise(prompt, config, digest), 1
        else:
            text, attempts = _remote(prompt, config)
    return LlmResponse(text=text, provider_id=config.provider_id, prompt_hash=digest, attempts=attempts)


def _echo_shot(prompt: PromptSpec) -> str:
    if not prompt.shots:
        return _NO_SHOT_TEXT
    return prompt.shots[0].example_text


def _lookup(prompt: PromptSpec, config: ProviderConfig) -> str:
    try:
        return config.lookup_map[prompt.query_input]
    except KeyError:
        raise UnknownExampleError(
            f"provider {config.provider_id!r} has no canned output for this input",
            detail={"query_input": prompt.query_input[:200]},
        ) from None


def _noise(prompt: PromptSpec, config: ProviderConfig, digest: str) -> str:
    rng = random.Random(stable_seed(config.provider_id, digest))
    words = [rng.choice(_GIBBERISH_WORDS) for _ in range(rng.randint(20, 40))]
    lines = []
    while words:
        take, words = words[:6], words[6:]
        lines.append(" ".join(take))
    return "\n".join(lines)


def _remote(prompt: PromptSpec, config: ProviderConfig) -> tuple[str, int]:
    headers = {"Content-Type": "application/json"}
    if config.token:
        headers["Authorization"] = f"Bearer {config.token}"
    payload = {"prompt": prompt.rendered, "max_tokens": config.max_tokens}

    last_error: Exception | None = None
    attempts = 0
    for attempt in range(config.max_retries + 1):
        attempts = attempt + 1
        if attempt > 0:
            time.sleep(config.backoff_base * config.backoff_factor ** (attempt - 1))
        try:
            response = httpx.post(config.url, json=payload, headers=headers, timeout=config.timeout)
        except httpx.TimeoutException:
            last_error = ProviderTimeoutError(
                f"provider {config.provider_id!r} timed out after {config.timeout}s",
                detail={"attempts": attempts},
            )
            continue
        except httpx.HTTPError as exc:
            last_error = ProviderUnavailableError(
                f"provider {config.provider_id!r} unreachable: {exc}",
                detail={"attempts": attempts},
            )
            continue
        if response.status_code >= 500:
            last_error = ProviderHttpError(
                f"provider {config.provider_id!r} returned {response.status_code}",
                detail={"status": response.status_code, "attempts": attempts},
            )
            continue
        if response.status_code >= 400:
            # Client errors are not transient; do not burn retries on them.
            raise ProviderHttpError(
                f"provider {config.provider_id!r} rejected the request: {response.status_code}",
                detail={"status": response.status_code, "body": response.text[:500]},
            )
        body = response.json()
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise ProviderHttpError(
                f"provider {config.provider_id!r} returned a malformed body",
                detail={"body": str(body)[:500]},
            )
        return body["text"], attempts
    raise last_error if last_error is not None else ProviderUnavailableError(
        f"provider {config.provider_id!r} failed without a recorded error"
    )
