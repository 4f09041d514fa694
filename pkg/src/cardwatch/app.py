"""Shared wiring behind the CLI and the HTTP service.

Both surfaces build an AppState and call the same operations, so a scan
over HTTP and a scan from the command line produce identical payloads
for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cache import PreviewCache
from .cards import CardMetadata, PlatformProfile
from .config import Config
from .detector import DivergenceReport, differential_scan
from .fetcher import Fetcher, Persona
from .report import ScanReport
from .sdk import SdkEmulator
from .unfurl import UnfurlResult, unfurl

DEFAULT_PROFILE = "twitter-like"


@dataclass
class AppState:
    config: Config
    fetcher: Fetcher
    sdk: SdkEmulator = field(default_factory=SdkEmulator)
    cache: PreviewCache = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.cache is None:
            self.cache = PreviewCache(
                default_ttl=self.config.cache_ttl,
                persistence_path=self.config.cache_persistence,
            )

    @classmethod
    def from_config(
        cls, config: Config, resolver: dict[str, tuple[str, int]] | None = None
    ) -> AppState:
        fetcher = Fetcher(
            resolver=resolver, limits=config.limits, proxy=config.proxy
        )
        return cls(config=config, fetcher=fetcher)

    # -- operations ---------------------------------------------------------

    def _profile(self, name: str | None) -> PlatformProfile:
        return self.config.profile(name or DEFAULT_PROFILE)

    def unfurl(
        self,
        url: str,
        profile: str | None = None,
        persona: str | Persona | None = None,
    ) -> UnfurlResult:
        resolved_profile = self._profile(profile)
        if persona is None:
            persona = self.config.persona("crawler")
        elif isinstance(persona, str):
            persona = self.config.persona(persona)
        return unfurl(url, self.fetcher, persona, resolved_profile)

    def scan(
        self,
        url: str,
        profile: str | None = None,
        strict_direct: bool | None = None,
        scanned_at: str | None = None,
    ) -> ScanReport:
        report = self.scan_report(url, profile=profile, strict_direct=strict_direct)
        return ScanReport.wrap(report, scanned_at=scanned_at)

    def scan_report(
        self, url: str, profile: str | None = None, strict_direct: bool | None = None
    ) -> DivergenceReport:
        return differential_scan(
            url,
            self.fetcher,
            crawler=self.config.persona("crawler"),
            browser=self.config.persona("browser"),
            profile=self._profile(profile),
            rep=self.config.reputation,
            thresholds=self.config.thresholds,
            strict_direct=(
                self.config.strict_direct if strict_direct is None else strict_direct
            ),
        )

    def recrawl(self, url: str, profile: str | None = None) -> CardMetadata:
        return self.cache.recrawl(
            url, lambda u: self.unfurl(u, profile=profile).card
        )

    def cached_or_unfurl(self, url: str, profile: str | None = None) -> CardMetadata:
        card = self.cache.get(url)
        if card is not None:
            return card
        card = self.unfurl(url, profile=profile).card
        self.cache.put(url, card)
        return card
