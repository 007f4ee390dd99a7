"""HTTP transport, on-disk cache and rate limiting shared by every client.

Clients never talk to the network directly; they go through :class:`Fetcher`,
which consults the cache first and refuses any network access in offline mode.
The cache layout is ``{cache}/{source}/{key}``, so a checked-in fixture tree
doubles as a pre-populated cache for offline runs.
"""

from __future__ import annotations

import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol
from urllib.parse import quote

from rankaudit.errors import (
    ConfigurationError,
    CredentialError,
    NotFoundError,
    TransportError,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "LIBRARIESIO_API_KEY"
FORGE_TOKEN_ENV = "FORGE_TOKEN"


@dataclass(frozen=True)
class Response:
    status: int
    body: bytes
    headers: Mapping[str, str] = field(default_factory=dict)


class Transport(Protocol):
    calls: int

    def get(self, url: str, headers: Mapping[str, str] | None = None) -> Response: ...


class RequestsTransport:
    """Live transport backed by ``requests``; counts every call."""

    def __init__(self, timeout: float = 30.0):
        import requests

        self._session = requests.Session()
        self._session.headers["User-Agent"] = "rankaudit/0.1"
        self.timeout = timeout
        self.calls = 0

    def get(self, url, headers=None):
        import requests

        self.calls += 1
        try:
            r = self._session.get(url, headers=dict(headers or {}), timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"GET {url}: {exc}") from exc
        return Response(r.status_code, r.content, dict(r.headers))


class CountingTransport:
    """Stub transport for tests: serves canned responses and counts calls."""

    def __init__(self, responses: Mapping[str, Response] | None = None):
        self.responses = dict(responses or {})
        self.calls = 0
        self.urls: list[str] = []

    def get(self, url, headers=None):
        self.calls += 1
        self.urls.append(url)
        if url not in self.responses:
            return Response(404, b"")
        resp = self.responses[url]
        if isinstance(resp, Exception):
            raise resp
        return resp


class RateLimiter:
    """Spaces calls at least ``1/rate`` seconds apart (thread-safe)."""

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._next = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next is not None and now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


@dataclass(frozen=True)
class FetchPolicy:
    rate_limit: float = 1.0
    max_retries: int = 3
    backoff: tuple[float, ...] = (1.0, 2.0, 4.0)
    cache_dir: Path | None = None
    offline: bool = False
    api_key_env: str = API_KEY_ENV
    token_env: str = FORGE_TOKEN_ENV
    concurrency: int = 4

    def credential(self, env_name: str) -> str | None:
        return os.environ.get(env_name) or None


def _safe_key(key: str) -> str:
    return "/".join(quote(part, safe="@+-_.") for part in key.split("/") if part not in ("", ".", ".."))


class Fetcher:
    """Cache-first GET with retries, backoff and rate limiting."""

    def __init__(
        self,
        policy: FetchPolicy,
        transport: Transport | None = None,
        limiter: RateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.policy = policy
        self._transport = transport
        self.limiter = limiter or RateLimiter(policy.rate_limit)
        self._sleep = sleep

    @property
    def transport(self) -> Transport:
        if self.policy.offline:
            raise ConfigurationError("network access attempted in offline mode")
        if self._transport is None:
            self._transport = RequestsTransport()
        return self._transport

    @property
    def network_calls(self) -> int:
        return getattr(self._transport, "calls", 0)

    # cache ------------------------------------------------------------------

    def cache_path(self, source: str, key: str) -> Path | None:
        if self.policy.cache_dir is None:
            return None
        return Path(self.policy.cache_dir) / source / _safe_key(key)

    def read_cache(self, source: str, key: str) -> bytes | None:
        path = self.cache_path(source, key)
        if path is not None and path.is_file():
            return path.read_bytes()
        return None

    def write_cache(self, source: str, key: str, body: bytes) -> None:
        path = self.cache_path(source, key)
        if path is None or self.policy.offline:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(body)
        os.replace(tmp, path)

    # fetching -----------------------------------------------------------------

    def get(
        self,
        source: str,
        key: str,
        url: str,
        headers: Mapping[str, str] | None = None,
    ) -> bytes:
        """Return the body for ``url``, from cache when possible.

        Raises NotFoundError on 404 (or a cache miss in offline mode),
        CredentialError on 401/403 and TransportError when retries run out.
        """
        cached = self.read_cache(source, key)
        if cached is not None:
            return cached
        if self.policy.offline:
            raise NotFoundError(f"{source}/{key} not in cache (offline)")
        resp = self.request(url, headers)
        self.write_cache(source, key, resp.body)
        return resp.body

    def request(self, url: str, headers: Mapping[str, str] | None = None) -> Response:
        transport = self.transport
        attempts = self.policy.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                delay = self.policy.backoff[min(attempt - 1, len(self.policy.backoff) - 1)]
                self._sleep(delay)
            self.limiter.wait()
            try:
                resp = transport.get(url, headers)
            except TransportError as exc:
                last_error = exc
                logger.warning("GET %s failed (attempt %d): %s", url, attempt + 1, exc)
                continue
            if resp.status == 404:
                raise NotFoundError(f"GET {url}: not found")
            if resp.status in (401, 403):
                raise CredentialError(f"GET {url}: HTTP {resp.status}")
            if resp.status == 429 or resp.status >= 500:
                last_error = TransportError(f"GET {url}: HTTP {resp.status}")
                logger.warning("GET %s returned %d (attempt %d)", url, resp.status, attempt + 1)
                continue
            if resp.status >= 400:
                raise TransportError(f"GET {url}: HTTP {resp.status}")
            return resp
        raise TransportError(f"GET {url}: giving up after {attempts} attempts") from last_error

    def cached_document(self, source: str, key: str, build: Callable[[], bytes]) -> bytes:
        """Cache-first wrapper for documents assembled from several requests."""
        cached = self.read_cache(source, key)
        if cached is not None:
            return cached
        if self.policy.offline:
            raise NotFoundError(f"{source}/{key} not in cache (offline)")
        body = build()
        self.write_cache(source, key, body)
        return body


def fetch_many(fn: Callable, items, workers: int = 4) -> list:
    """Map ``fn`` over ``items`` with bounded parallelism, preserving input order."""
    from concurrent.futures import ThreadPoolExecutor

    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
