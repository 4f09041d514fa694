"""One (URL, persona, profile) fetch turned into a card plus its chain."""

from __future__ import annotations

from dataclasses import dataclass

from .cards import CardMetadata, PlatformProfile, extract_tags, resolve_card
from .fetcher import FetchLimits, Fetcher, Persona, RedirectChain


@dataclass(frozen=True)
class UnfurlResult:
    url: str
    persona_label: str
    profile_name: str
    chain: RedirectChain
    card: CardMetadata
    body: bytes
    body_digest: str
    content_type: str | None
    js_redirect_suspected: bool

    @property
    def final_url(self) -> str:
        return self.chain.final_url

    @property
    def final_host(self) -> str:
        return self.chain.hops[-1].host


def unfurl(
    url: str,
    fetcher: Fetcher,
    persona: Persona,
    profile: PlatformProfile,
    limits: FetchLimits | None = None,
) -> UnfurlResult:
    """Fetch the URL as the persona and resolve its sharing card.

    Relative tag URLs resolve against the final (post-redirect) URL; the
    card's default canonical target stays the URL that was shared.
    """
    result = fetcher.fetch(url, persona, limits)
    tags = extract_tags(result.body, base_url=result.final_url)
    card = resolve_card(tags, profile, fetch_url=url)
    return UnfurlResult(
        url=url,
        persona_label=persona.label.value,
        profile_name=profile.name,
        chain=result.chain,
        card=card,
        body=result.body,
        body_digest=result.body_digest,
        content_type=result.content_type,
        js_redirect_suspected=result.js_redirect_suspected,
    )
