"""Chat-completion providers, a fixture-backed mock, and usage accounting."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, Union

import httpx

log = logging.getLogger(__name__)


class ProviderError(RuntimeError):
    """Base class for every failure surfaced by :func:`complete`."""

    def __init__(self, message: str, provider: str = "", attempts: int = 1):
        super().__init__(message)
        self.provider = provider
        self.attempts = attempts


class TransportError(ProviderError):
    """Connection failure or server-side error; retried with backoff."""


class ProviderTimeout(TransportError):
    pass


class AuthenticationError(ProviderError):
    pass


class MalformedResponseError(ProviderError):
    pass


class FixtureMissingError(ProviderError):
    """The mock provider has no completion for a prompt."""


@dataclass(frozen=True)
class ProviderConfig:
    name: str
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    kind: str = "http"
    # prices per million tokens, user supplied
    price_in: float = 0.0
    price_out: float = 0.0

    def __post_init__(self):
        if not self.name:
            raise ValueError("provider name must not be empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.kind not in ("http", "mock"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.price_in < 0 or self.price_out < 0:
            raise ValueError("prices must be non-negative")

    @classmethod
    def from_dict(cls, d: Mapping) -> ProviderConfig:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown provider config fields {sorted(extra)}")
        return cls(**d)

    def cost(self, prompt_tokens: int, completion_tokens: int) -> float:
        return (prompt_tokens * self.price_in + completion_tokens * self.price_out) / 1_000_000


@dataclass(frozen=True)
class UsageStats:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    calls: int = 0
    estimated_cost: float = 0.0

    def __post_init__(self):
        if min(self.prompt_tokens, self.completion_tokens, self.calls) < 0 or self.estimated_cost < 0:
            raise ValueError("usage figures must be non-negative")

    def __add__(self, other: UsageStats) -> UsageStats:
        return UsageStats(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.calls + other.calls,
            self.estimated_cost + other.estimated_cost,
        )

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "calls": self.calls,
            "estimated_cost": round(self.estimated_cost, 6),
        }


def sum_usage(stats: Iterable[UsageStats]) -> UsageStats:
    total = UsageStats()
    for s in stats:
        total = total + s
    return total


@dataclass(frozen=True)
class CallRecord:
    provider: str
    stage: str
    usage: UsageStats
    fingerprint: str


class UsageLedger:
    """Thread-safe, append-only log of completion calls."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[CallRecord] = []

    def record(self, rec: CallRecord) -> None:
        with self._lock:
            self._records.append(rec)

    @property
    def records(self) -> list[CallRecord]:
        with self._lock:
            return list(self._records)

    def total(self) -> UsageStats:
        return sum_usage(r.usage for r in self.records)

    def by_provider(self) -> dict[str, UsageStats]:
        out: dict[str, UsageStats] = {}
        for r in self.records:
            out[r.provider] = out.get(r.provider, UsageStats()) + r.usage
        return dict(sorted(out.items()))


def fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def whitespace_tokens(text: str) -> int:
    return len(text.split())


# ---------------------------------------------------------------------------
# providers

Script = Sequence[Union[str, BaseException]]


class MockProvider:
    """Offline provider answering from a script or a fixture directory.

    Fixture lookup for a prompt, in order: ``<dir>/<sha256 of prompt>.txt``;
    the first entry of ``<dir>/match.json`` (a list of
    ``{"contains": ..., "file"|"response": ...}``) whose text occurs in the
    prompt; then ``<dir>/001.txt``, ``002.txt``, ... by call order.
    """

    def __init__(self, config: ProviderConfig, fixture_dir: str | Path | None = None, script: Script | None = None):
        self.config = config
        self.fixture_dir = Path(fixture_dir) if fixture_dir is not None else None
        self.script = list(script) if script is not None else None
        self._lock = threading.Lock()
        self._calls = 0
        self._rules = []
        if self.fixture_dir is not None and (self.fixture_dir / "match.json").is_file():
            self._rules = json.loads((self.fixture_dir / "match.json").read_text(encoding="utf-8"))

    @property
    def calls(self) -> int:
        return self._calls

    def _next_ordinal(self) -> int:
        with self._lock:
            self._calls += 1
            return self._calls

    def _lookup(self, prompt: str, n: int) -> str:
        if self.script is not None:
            if n > len(self.script):
                raise FixtureMissingError(f"script exhausted after {len(self.script)} calls", self.config.name)
            item = self.script[n - 1]
            if isinstance(item, BaseException):
                raise item
            return item
        if self.fixture_dir is None:
            raise FixtureMissingError("mock provider has neither script nor fixture directory", self.config.name)
        exact = self.fixture_dir / f"{fingerprint(prompt)}.txt"
        if exact.is_file():
            return exact.read_text(encoding="utf-8")
        for rule in self._rules:
            if rule["contains"] in prompt:
                if "response" in rule:
                    return rule["response"]
                return (self.fixture_dir / rule["file"]).read_text(encoding="utf-8")
        ordinal = self.fixture_dir / f"{n:03d}.txt"
        if ordinal.is_file():
            return ordinal.read_text(encoding="utf-8")
        raise FixtureMissingError(
            f"no fixture for prompt {fingerprint(prompt)[:12]} (call {n}) in {self.fixture_dir}", self.config.name
        )

    def send(self, prompt: str) -> tuple[str, int, int]:
        text = self._lookup(prompt, self._next_ordinal())
        return text, whitespace_tokens(prompt), whitespace_tokens(text)


class HTTPProvider:
    """Generic chat-completions endpoint (``messages`` in, ``choices`` out)."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        if not config.endpoint:
            raise ValueError(f"provider {config.name} has no endpoint")
        self.config = config
        self.client = client or httpx.Client()

    def send(self, prompt: str) -> tuple[str, int, int]:
        cfg = self.config
        headers = {"Content-Type": "application/json"}
        if cfg.api_key_env:
            key = os.environ.get(cfg.api_key_env)
            if not key:
                raise AuthenticationError(f"environment variable {cfg.api_key_env} is not set", cfg.name)
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
        }
        try:
            resp = self.client.post(cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"request timed out after {cfg.timeout}s", cfg.name) from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}", cfg.name) from exc
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"authentication rejected ({resp.status_code})", cfg.name)
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"server returned {resp.status_code}", cfg.name)
        if resp.status_code >= 400:
            raise MalformedResponseError(f"request rejected ({resp.status_code}): {resp.text[:200]}", cfg.name)
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected response shape: {exc}", cfg.name) from exc
        if not isinstance(text, str) or not text.strip():
            raise MalformedResponseError("empty completion", cfg.name)
        usage = data.get("usage") or {}
        pt = usage.get("prompt_tokens")
        ct = usage.get("completion_tokens")
        if pt is None or ct is None:
            log.warning("%s reported no usage; counting whitespace tokens", cfg.name)
            pt, ct = whitespace_tokens(prompt), whitespace_tokens(text)
        return text, int(pt), int(ct)


def make_provider(config: ProviderConfig, fixtures: str | Path | None = None):
    if config.kind == "mock":
        base = Path(fixtures) if fixtures is not None else None
        return MockProvider(config, base / config.name if base is not None else None)
    return HTTPProvider(config)


class AuditLog:
    """Writes every prompt and completion under a run directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def write(self, stage: str, provider: str, prompt: str, completion: str) -> None:
        d = self.directory / stage / provider
        d.mkdir(parents=True, exist_ok=True)
        fp = fingerprint(prompt)[:16]
        (d / f"{fp}.prompt.txt").write_text(prompt, encoding="utf-8")
        (d / f"{fp}.completion.txt").write_text(completion, encoding="utf-8")


def complete(
    provider,
    prompt: str,
    *,
    ledger: UsageLedger | None = None,
    stage: str = "",
    audit: AuditLog | None = None,
    sleep: Callable[[float], None] = time.sleep,
    backoff: float = 0.5,
) -> tuple[str, UsageStats]:
    """One completion with retries on transport failures.

    Waits ``backoff * 2**i`` seconds before retry ``i + 1``.  When retries are
    exhausted the last transport error is raised with ``attempts`` set.
    """
    cfg: ProviderConfig = provider.config
    attempts = cfg.max_retries + 1
    for i in range(attempts):
        try:
            text, pt, ct = provider.send(prompt)
        except TransportError as exc:
            exc.provider = exc.provider or cfg.name
            exc.attempts = i + 1
            if i + 1 >= attempts:
                raise type(exc)(f"{exc} (gave up after {i + 1} attempts)", cfg.name, i + 1) from exc
            log.info("%s: %s; retrying", cfg.name, exc)
            sleep(backoff * 2**i)
            continue
        if not isinstance(text, str) or not text.strip():
            raise MalformedResponseError("empty completion", cfg.name, i + 1)
        usage = UsageStats(pt, ct, 1, cfg.cost(pt, ct))
        if ledger is not None:
            ledger.record(CallRecord(cfg.name, stage, usage, fingerprint(prompt)))
        if audit is not None:
            audit.write(stage or "misc", cfg.name, prompt, text)
        return text, usage
    raise AssertionError("unreachable")
