"""Platform-side emulation of the share-SDK card flow.

Covers domain registration, access-token issuance, page authorization,
and card creation in two validation modes: the flawed check that only
looks at the submitted link's own host (bypassable via a registered-host
shortlink), and the mitigated check that resolves the link's redirect
chain and validates the final destination.
"""

from __future__ import annotations

import re
import secrets
import threading
import time
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Callable
from urllib.parse import urlsplit

from . import hosts
from .cards import CardMetadata
from .errors import AuthFailed, InvalidDomain, NetworkError, TokenExpired, UnknownApp
from .fetcher import BROWSER_PERSONA, Fetcher, Persona

_HOSTNAME_RE = re.compile(
    r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?(\.[a-z0-9]([a-z0-9-]*[a-z0-9])?)+$|"
    r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?$"
)

DEFAULT_TOKEN_LIFETIME = 7200.0  # seconds


class SdkMode(str, Enum):
    FLAWED = "Flawed"
    MITIGATED = "Mitigated"


@dataclass(frozen=True)
class AppRegistration:
    app_id: str
    app_secret: str
    registered_domains: frozenset[str]


@dataclass(frozen=True)
class AccessToken:
    token: str
    app_id: str
    expires_at: float


@dataclass(frozen=True)
class SdkCardRequest:
    token: str
    title: str
    description: str
    image_url: str | None
    jump_link: str


@dataclass(frozen=True)
class SdkDecision:
    accepted: bool
    mode: SdkMode
    reason: str
    resolved_final_host: str | None = None

    def __post_init__(self):
        if self.mode is SdkMode.FLAWED and self.resolved_final_host is not None:
            raise ValueError("flawed mode never resolves a final host")


def _normalize_domains(domains) -> frozenset[str]:
    normalized = set()
    for domain in domains:
        host = str(domain).strip().lower().rstrip(".")
        if not host or not _HOSTNAME_RE.match(host):
            raise InvalidDomain(f"malformed hostname: {domain!r}")
        normalized.add(host)
    if not normalized:
        raise InvalidDomain("registered_domains must be non-empty")
    return frozenset(normalized)


class SdkEmulator:
    """Shared registration/token state with atomic access."""

    def __init__(
        self,
        clock: Callable[[], float] = time.time,
        token_lifetime: float = DEFAULT_TOKEN_LIFETIME,
        registrable_match: bool = False,
    ):
        self._clock = clock
        self._token_lifetime = token_lifetime
        self._registrable_match = registrable_match
        self._registrations: dict[str, AppRegistration] = {}
        self._tokens: dict[str, AccessToken] = {}
        self._lock = threading.Lock()

    def register_app(self, registered_domains) -> AppRegistration:
        domains = _normalize_domains(registered_domains)
        registration = AppRegistration(
            app_id=f"app-{uuid.uuid4().hex[:12]}",
            app_secret=secrets.token_hex(16),
            registered_domains=domains,
        )
        with self._lock:
            self._registrations[registration.app_id] = registration
        return registration

    def issue_token(self, app_id: str, app_secret: str) -> AccessToken:
        with self._lock:
            registration = self._registrations.get(app_id)
            if registration is None or registration.app_secret != app_secret:
                raise AuthFailed("unknown app_id or wrong secret")
            token = AccessToken(
                token=secrets.token_hex(16),  # 128 bits
                app_id=app_id,
                expires_at=self._clock() + self._token_lifetime,
            )
            self._tokens[token.token] = token
            return token

    def _registration_for_token(self, token: str) -> AppRegistration:
        with self._lock:
            record = self._tokens.get(token)
            if record is None:
                raise AuthFailed("unknown access token")
            if self._clock() >= record.expires_at:
                raise TokenExpired("access token expired")
            registration = self._registrations.get(record.app_id)
        if registration is None:
            raise UnknownApp(record.app_id)
        return registration

    def validate_config(self, app_id: str, page_url: str) -> bool:
        with self._lock:
            registration = self._registrations.get(app_id)
        if registration is None:
            raise UnknownApp(app_id)
        host = (urlsplit(page_url).hostname or "").lower()
        return self._host_registered(host, registration, registrable=False)

    def _host_registered(
        self, host: str, registration: AppRegistration, registrable: bool
    ) -> bool:
        if not host:
            return False
        if registrable:
            host = hosts.registrable_host(host)
        return host in registration.registered_domains

    def create_card(
        self,
        req: SdkCardRequest,
        mode: SdkMode,
        fetcher: Fetcher | None = None,
        browser_persona: Persona = BROWSER_PERSONA,
    ) -> tuple[SdkDecision, CardMetadata | None]:
        """Rule on a card request; card fields are taken verbatim on accept.

        Flawed mode checks only the jump link's own host against the
        registration. Mitigated mode additionally resolves the link's
        redirect chain (browser persona) and requires the final
        registrable host to be registered and the chain untruncated.
        """
        registration = self._registration_for_token(req.token)
        jump_host = (urlsplit(req.jump_link).hostname or "").lower()

        if mode is SdkMode.FLAWED:
            if self._host_registered(jump_host, registration, self._registrable_match):
                decision = SdkDecision(
                    accepted=True, mode=mode, reason="jump link host is registered"
                )
                return decision, self._build_card(req)
            return (
                SdkDecision(
                    accepted=False,
                    mode=mode,
                    reason=f"jump link host {jump_host!r} is not registered",
                ),
                None,
            )

        if fetcher is None:
            raise ValueError("mitigated mode requires a fetcher")
        try:
            chain = fetcher.trace_redirects(req.jump_link, browser_persona)
        except NetworkError as exc:
            return (
                SdkDecision(
                    accepted=False,
                    mode=mode,
                    reason=f"jump link unresolvable: {exc}",
                    resolved_final_host=None,
                ),
                None,
            )
        final_host = chain.hops[-1].host
        resolved = hosts.registrable_host(final_host) if final_host else ""
        if chain.truncated:
            return (
                SdkDecision(
                    accepted=False,
                    mode=mode,
                    reason="redirect chain exceeded the hop limit",
                    resolved_final_host=resolved or None,
                ),
                None,
            )
        if resolved in registration.registered_domains:
            return (
                SdkDecision(
                    accepted=True,
                    mode=mode,
                    reason="final destination host is registered",
                    resolved_final_host=resolved,
                ),
                self._build_card(req),
            )
        return (
            SdkDecision(
                accepted=False,
                mode=mode,
                reason=f"final destination host {resolved!r} is not registered",
                resolved_final_host=resolved or None,
            ),
            None,
        )

    @staticmethod
    def _build_card(req: SdkCardRequest) -> CardMetadata:
        return CardMetadata(
            canonical_url=req.jump_link,
            title=req.title,
            description=req.description,
            image_url=req.image_url,
        )
