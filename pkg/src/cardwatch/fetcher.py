"""HTTP retrieval with configurable personas and full redirect recording.

Redirects are followed hop by hop (never delegated to a library's
auto-follow) so every hop's status, target, and timing is captured, and
the User-Agent is controlled on every request. A resolver override maps
lab host aliases to loopback ports without touching system DNS.
"""

from __future__ import annotations

import hashlib
import http.client
import re
import socket
import time
from dataclasses import dataclass
from enum import Enum
from urllib.parse import urljoin, urlsplit

from .errors import NetworkError, UnsupportedScheme

_TOKEN_RE = re.compile(r"^[!#$%&'*+.^_`|~0-9A-Za-z-]+$")

_META_REFRESH_RE = re.compile(
    rb"<meta[^>]+http-equiv\s*=\s*[\"']?refresh[\"']?[^>]*>", re.IGNORECASE
)
_REFRESH_CONTENT_RE = re.compile(
    rb"content\s*=\s*[\"']?\s*\d+\s*;\s*url\s*=\s*([^\"'>\s]+)", re.IGNORECASE
)

# Lexical hints of scripted redirects; flagged, never executed.
_JS_REDIRECT_RE = re.compile(
    rb"(window\.location|document\.location|location\.href|location\.replace\s*\()",
    re.IGNORECASE,
)


class PersonaLabel(str, Enum):
    CRAWLER = "Crawler"
    BROWSER = "Browser"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Persona:
    """A fetch identity: User-Agent plus extra headers."""

    label: PersonaLabel
    user_agent: str
    extra_headers: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.user_agent:
            raise ValueError("user_agent must be non-empty")
        for name, _ in self.extra_headers:
            if not _TOKEN_RE.match(name):
                raise ValueError(f"invalid header name: {name!r}")


CRAWLER_PERSONA = Persona(PersonaLabel.CRAWLER, "Twitterbot/1.0")
BROWSER_PERSONA = Persona(
    PersonaLabel.BROWSER,
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36"
    " (KHTML, like Gecko) Chrome/120.0 Safari/537.36",
)

BUILTIN_PERSONAS = {"crawler": CRAWLER_PERSONA, "browser": BROWSER_PERSONA}


class HopKind(str, Enum):
    HTTP_3XX = "Http3xx"
    META_REFRESH = "MetaRefresh"
    FINAL = "Final"


@dataclass(frozen=True)
class Hop:
    url: str
    status: int
    kind: HopKind
    location: str | None
    elapsed_ms: float

    def __post_init__(self):
        if (self.kind is HopKind.FINAL) != (self.location is None):
            raise ValueError("location must be absent exactly when kind is Final")

    @property
    def host(self) -> str:
        return (urlsplit(self.url).hostname or "").lower()


@dataclass(frozen=True)
class RedirectChain:
    hops: tuple[Hop, ...]
    truncated: bool = False

    def __post_init__(self):
        if not self.hops:
            raise ValueError("chain must have at least one hop")

    @property
    def final_url(self) -> str:
        return self.hops[-1].url

    def hosts(self) -> list[str]:
        return [h.host for h in self.hops]


@dataclass(frozen=True)
class FetchResult:
    chain: RedirectChain
    body: bytes
    body_digest: str
    content_type: str | None
    body_capped: bool = False
    js_redirect_suspected: bool = False

    @property
    def final_url(self) -> str:
        return self.chain.final_url


@dataclass(frozen=True)
class FetchLimits:
    max_hops: int = 10
    timeout: float = 10.0
    max_body: int = 2 * 1024 * 1024

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


DEFAULT_LIMITS = FetchLimits()


def find_meta_refresh(body: bytes, base_url: str) -> str | None:
    """Target URL of the first meta-refresh tag, or None."""
    m = _META_REFRESH_RE.search(body)
    if not m:
        return None
    c = _REFRESH_CONTENT_RE.search(m.group(0))
    if not c:
        return None
    target = c.group(1).decode("utf-8", "replace").strip()
    return urljoin(base_url, target) if target else None


class Fetcher:
    """Shared immutable-configuration HTTP client.

    ``resolver`` maps hostname aliases to ``(address, port)`` pairs so lab
    hosts like ``benign.local`` resolve to loopback sockets.
    """

    def __init__(
        self,
        resolver: dict[str, tuple[str, int]] | None = None,
        limits: FetchLimits = DEFAULT_LIMITS,
        proxy: tuple[str, int] | None = None,
    ):
        self._resolver = {k.lower(): v for k, v in (resolver or {}).items()}
        self.limits = limits
        self._proxy = proxy

    def _open_connection(self, scheme: str, host: str, port: int, timeout: float):
        if self._proxy is not None:
            return http.client.HTTPConnection(*self._proxy, timeout=timeout)
        override = self._resolver.get(host.lower())
        if override is not None:
            return http.client.HTTPConnection(override[0], override[1], timeout=timeout)
        if scheme == "https":
            return http.client.HTTPSConnection(host, port, timeout=timeout)
        return http.client.HTTPConnection(host, port, timeout=timeout)

    def _single_request(self, url: str, persona: Persona, limits: FetchLimits):
        parts = urlsplit(url)
        scheme = parts.scheme.lower()
        if scheme not in ("http", "https"):
            raise UnsupportedScheme(f"unsupported scheme: {scheme or '(none)'}")
        host = parts.hostname
        if not host:
            raise NetworkError(f"URL has no host: {url}")
        port = parts.port or (443 if scheme == "https" else 80)
        path = parts.path or "/"
        if parts.query:
            path += "?" + parts.query
        if self._proxy is not None:
            path = url

        host_header = host if parts.port is None else f"{host}:{parts.port}"
        headers = {
            "Host": host_header,
            "User-Agent": persona.user_agent,
            "Accept": "*/*",
            "Connection": "close",
        }
        for name, value in persona.extra_headers:
            headers[name] = value

        conn = self._open_connection(scheme, host, port, limits.timeout)
        try:
            conn.putrequest("GET", path, skip_host=True, skip_accept_encoding=True)
            for name, value in headers.items():
                conn.putheader(name, value)
            conn.endheaders()
            resp = conn.getresponse()
            status = resp.status
            location = resp.getheader("Location")
            content_type = resp.getheader("Content-Type")
            body = resp.read(limits.max_body + 1)
            capped = len(body) > limits.max_body
            return status, location, content_type, body[: limits.max_body], capped
        finally:
            conn.close()

    def fetch(
        self, url: str, persona: Persona, limits: FetchLimits | None = None
    ) -> FetchResult:
        """Follow 3xx and meta-refresh redirects, recording every hop."""
        limits = limits or self.limits
        hops: list[Hop] = []
        body = b""
        content_type: str | None = None
        capped = False
        current = url

        while True:
            started = time.monotonic()
            try:
                status, location, content_type, body, capped = self._single_request(
                    current, persona, limits
                )
            except UnsupportedScheme:
                raise
            except NetworkError as exc:
                exc.partial_hops = hops
                raise
            except (OSError, http.client.HTTPException, socket.timeout) as exc:
                raise NetworkError(
                    f"fetch of {current} failed: {exc}", partial_hops=hops
                ) from exc
            elapsed_ms = (time.monotonic() - started) * 1000.0

            next_url: str | None = None
            kind = HopKind.FINAL
            if 300 <= status < 400 and location:
                kind = HopKind.HTTP_3XX
                next_url = urljoin(current, location.strip())
            elif 200 <= status < 300:
                refresh = find_meta_refresh(body, current)
                if refresh is not None:
                    kind = HopKind.META_REFRESH
                    next_url = refresh

            hops.append(
                Hop(
                    url=current,
                    status=status,
                    kind=kind,
                    location=next_url,
                    elapsed_ms=elapsed_ms,
                )
            )
            if next_url is None:
                chain = RedirectChain(hops=tuple(hops), truncated=False)
                break
            if len(hops) >= limits.max_hops:
                chain = RedirectChain(hops=tuple(hops), truncated=True)
                body, content_type, capped = b"", None, False
                break
            current = next_url

        return FetchResult(
            chain=chain,
            body=body,
            body_digest=hashlib.sha256(body).hexdigest(),
            content_type=content_type,
            body_capped=capped,
            js_redirect_suspected=bool(_JS_REDIRECT_RE.search(body)),
        )

    def trace_redirects(
        self, url: str, persona: Persona, max_hops: int | None = None
    ) -> RedirectChain:
        """As fetch, keeping only the chain."""
        limits = self.limits
        if max_hops is not None:
            limits = FetchLimits(
                max_hops=max_hops, timeout=limits.timeout, max_body=limits.max_body
            )
        return self.fetch(url, persona, limits).chain
