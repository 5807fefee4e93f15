"""Model access with deterministic replay, caching, retries, and budgets.

Every completion request is identified by a fingerprint over its content
(prompt body, model, temperature, max output). The live provider talks
HTTP; the replay provider serves recorded fixtures keyed by fingerprint,
which makes pipelines bit-reproducible without network access. Record
mode is live plus writing the fixture for later replay.

The gateway wraps a provider with an in-memory cache (live and record
modes only; replay always reads the fixture so reproducibility does not
depend on process history), bounded retries with exponential backoff for
transient failures, a concurrency semaphore, and an optional call budget.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol

import requests

from .errors import CfqError

DEFAULT_RETRIES = 3
DEFAULT_CONCURRENCY = 4
DEFAULT_BACKOFF = 1.0
MODES = ("live", "replay", "record")


class GatewayError(CfqError):
    pass


class AuthError(GatewayError):
    def __init__(self, status: int):
        super().__init__(f"authentication rejected (status {status})")
        self.status = status


class TransientError(GatewayError):
    pass


class FixtureMissing(GatewayError):
    def __init__(self, fingerprint: str):
        super().__init__(f"no recorded fixture for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class BudgetExceeded(GatewayError):
    def __init__(self, budget: int):
        super().__init__(f"provider call budget of {budget} exhausted")
        self.budget = budget


@dataclass(frozen=True)
class CompletionRequest:
    body: str
    model: str
    temperature: float
    max_output: int


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    fingerprint: str
    cached: bool
    attempts: int

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be at least 1")


def request_fingerprint(request: CompletionRequest) -> str:
    """SHA-256 over the canonical JSON form of the request content."""
    payload = {
        "body": request.body,
        "max_output": request.max_output,
        "model": request.model,
        "temperature": request.temperature,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Provider(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class LiveProvider:
    """POSTs completion requests to an HTTP endpoint.

    Expects a 200 response whose JSON carries the completion under "text".
    401/403 raise AuthError; 429, 5xx, and network timeouts are transient.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str,
        timeout: float = 60.0,
        http_post: Callable = requests.post,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self._post = http_post

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model,
            "prompt": request.body,
            "temperature": request.temperature,
            "max_output": request.max_output,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        try:
            response = self._post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise TransientError(f"network failure: {exc}") from exc
        status = response.status_code
        if status in (401, 403):
            raise AuthError(status)
        if status == 429 or status >= 500:
            raise TransientError(f"provider returned status {status}")
        if status != 200:
            raise GatewayError(f"unexpected provider status {status}")
        return response.json()["text"]


class ReplayProvider:
    """Serves completions from fixture files recorded earlier."""

    def __init__(self, fixtures_dir: Path | str):
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, request: CompletionRequest) -> str:
        fingerprint = request_fingerprint(request)
        path = self.fixtures_dir / f"{fingerprint}.json"
        if not path.exists():
            raise FixtureMissing(fingerprint)
        data = json.loads(path.read_text(encoding="utf-8"))
        return data["text"]


def record_fixture(fixtures_dir: Path | str, request: CompletionRequest, text: str) -> Path:
    """Write one fixture file named after the request fingerprint."""
    fingerprint = request_fingerprint(request)
    directory = Path(fixtures_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{fingerprint}.json"
    payload = {
        "fingerprint": fingerprint,
        "request": {
            "body": request.body,
            "model": request.model,
            "temperature": request.temperature,
            "max_output": request.max_output,
        },
        "text": text,
    }
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


class Gateway:
    def __init__(
        self,
        provider: Provider,
        *,
        mode: str = "live",
        model: str,
        temperature: float = 0.0,
        max_output: int = 2048,
        retries: int = DEFAULT_RETRIES,
        concurrency: int = DEFAULT_CONCURRENCY,
        backoff: float = DEFAULT_BACKOFF,
        budget: Optional[int] = None,
        fixtures_dir: Optional[Path | str] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if mode not in MODES:
            raise GatewayError(f"unknown gateway mode {mode!r}")
        if retries < 1:
            raise GatewayError("retries must be at least 1")
        if mode == "record" and fixtures_dir is None:
            raise GatewayError("record mode requires a fixtures directory")
        self.provider = provider
        self.mode = mode
        self.model = model
        self.temperature = temperature
        self.max_output = max_output
        self.retries = retries
        self.backoff = backoff
        self.budget = budget
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir is not None else None
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(concurrency)
        self._cache: dict[str, str] = {}
        self._lock = threading.Lock()
        self._spent = 0

    def request_for(self, prompt) -> CompletionRequest:
        """Build a request for a PromptText using the configured sampling."""
        return CompletionRequest(
            body=prompt.body,
            model=self.model,
            temperature=self.temperature,
            max_output=self.max_output,
        )

    @property
    def calls_spent(self) -> int:
        with self._lock:
            return self._spent

    def _charge(self) -> None:
        if self.mode == "replay":
            return
        with self._lock:
            if self.budget is not None and self._spent >= self.budget:
                raise BudgetExceeded(self.budget)
            self._spent += 1

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        fingerprint = request_fingerprint(request)
        if self.mode != "replay":
            with self._lock:
                cached = self._cache.get(fingerprint)
            if cached is not None:
                return CompletionResponse(
                    text=cached, fingerprint=fingerprint, cached=True, attempts=1
                )

        self._charge()
        text = None
        attempts = 0
        for attempt in range(1, self.retries + 1):
            attempts = attempt
            try:
                with self._semaphore:
                    text = self.provider.complete(request)
                break
            except TransientError:
                if attempt == self.retries:
                    raise
                self._sleep(self.backoff * (2 ** (attempt - 1)))
        assert text is not None

        if self.mode == "record":
            record_fixture(self.fixtures_dir, request, text)
        if self.mode != "replay":
            with self._lock:
                self._cache[fingerprint] = text
        return CompletionResponse(
            text=text, fingerprint=fingerprint, cached=False, attempts=attempts
        )
