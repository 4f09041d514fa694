"""Mitigation engine: differential cloaking scan, redirect reputation
analysis, and card/page consistency auditing, synthesized into a verdict.

The core check fetches the same URL twice, once as the platform crawler
and once as an ordinary browser, and compares where each view lands and what
it says. A server that answers the two personas differently is exactly
the forgery mechanism this module exists to catch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from html.parser import HTMLParser
from urllib.parse import urlsplit

from . import hosts
from .cards import CardMetadata, PlatformProfile
from .errors import NetworkError
from .fetcher import Fetcher, Persona, RedirectChain
from .unfurl import UnfurlResult, unfurl

_TOKEN_SPLIT_RE = re.compile(r"[^0-9a-z]+")

# <title> is window chrome, not in-page text.
_SKIPPED_CONTENT = {"script", "style", "noscript", "title"}


class Verdict(str, Enum):
    BENIGN = "Benign"
    CLOAKING_SUSPECTED = "CloakingSuspected"
    REDIRECT_LAUNDERING = "RedirectLaundering"
    INCONSISTENT_CARD = "InconsistentCard"
    DENIED = "Denied"


class Finding(str, Enum):
    DENIED = "Denied"
    ALLOWED = "Allowed"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Thresholds:
    t_content: float = 0.80
    t_card: float = 0.30

    def __post_init__(self):
        for name in ("t_content", "t_card"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {value}")


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class ReputationList:
    """Deny/allow hostname patterns (exact or ``*.suffix``)."""

    denied_hosts: frozenset[str] = frozenset()
    allowed_hosts: frozenset[str] = frozenset()

    def __post_init__(self):
        overlap = self.denied_hosts & self.allowed_hosts
        if overlap:
            raise ValueError(f"hosts in both deny and allow sets: {sorted(overlap)}")

    @classmethod
    def from_lines(cls, lines) -> ReputationList:
        """One pattern per line; ``#`` comments; leading ``!`` = allowed."""
        denied, allowed = set(), set()
        for raw in lines:
            line = raw.split("#", 1)[0].strip().lower()
            if not line:
                continue
            if line.startswith("!"):
                allowed.add(line[1:].strip())
            else:
                denied.add(line)
        return cls(denied_hosts=frozenset(denied), allowed_hosts=frozenset(allowed))

    @classmethod
    def from_file(cls, path) -> ReputationList:
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    def classify(self, host: str) -> Finding:
        for pattern in self.denied_hosts:
            if hosts.host_matches_pattern(host, pattern):
                return Finding.DENIED
        for pattern in self.allowed_hosts:
            if hosts.host_matches_pattern(host, pattern):
                return Finding.ALLOWED
        return Finding.UNKNOWN


EMPTY_REPUTATION = ReputationList()


@dataclass(frozen=True)
class HopFinding:
    hop_index: int
    host: str
    finding: Finding


def reputation_check(chain: RedirectChain, rep: ReputationList) -> list[HopFinding]:
    """Classify every hop's host against the deny/allow patterns, in hop order."""
    return [
        HopFinding(hop_index=i, host=hop.host, finding=rep.classify(hop.host))
        for i, hop in enumerate(chain.hops)
    ]


class _VisibleTextExtractor(HTMLParser):
    """Collects text content outside script/style/noscript."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._skip_depth = 0
        self.parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag.lower() in _SKIPPED_CONTENT:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag.lower() in _SKIPPED_CONTENT and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth:
            self.parts.append(data)


def visible_text(body: bytes | str) -> str:
    """Tag-stripped page text with whitespace collapsed; no JS execution."""
    text = body.decode("utf-8", "replace") if isinstance(body, bytes) else body
    parser = _VisibleTextExtractor()
    try:
        parser.feed(text)
        parser.close()
    except Exception:
        pass
    return " ".join(" ".join(parser.parts).split())


def normalize_tokens(text: str) -> set[str]:
    """Lowercase, split on non-alphanumeric, drop tokens shorter than 2."""
    return {t for t in _TOKEN_SPLIT_RE.split(text.lower()) if len(t) >= 2}


def token_jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def consistency_audit(card: CardMetadata, page_text: str) -> float:
    """Similarity of the card's text to the page's visible text.

    Containment form (|intersection| / |card tokens|) when the card's
    token set is the smaller one, so long pages do not dilute an honest
    short card; plain Jaccard otherwise. Empty card or empty page yields
    a defined 0.0 (callers flag insufficient data separately).
    """
    card_tokens = normalize_tokens(card.text)
    page_tokens = normalize_tokens(page_text)
    if not card_tokens or not page_tokens:
        return 0.0
    inter = card_tokens & page_tokens
    if len(card_tokens) < len(page_tokens):
        return len(inter) / len(card_tokens)
    return len(inter) / len(card_tokens | page_tokens)


def audit_insufficient(card: CardMetadata, page_text: str) -> bool:
    return not normalize_tokens(card.text) or not normalize_tokens(page_text)


def direct_link_gate(chain: RedirectChain) -> bool:
    """Strict-mode pass: exactly one hop and it resolved."""
    return len(chain.hops) == 1 and not chain.truncated


def chain_crosses_registrable_boundary(chain: RedirectChain) -> bool:
    regs = [hosts.registrable_host(h) for h in chain.hosts() if h]
    return len(set(regs)) > 1


@dataclass(frozen=True)
class HopRecord:
    """Timing-free hop summary, stable across identical scans."""

    url: str
    status: int
    kind: str
    location: str | None


@dataclass(frozen=True)
class ViewSummary:
    """One persona's side of the differential scan."""

    persona_label: str
    final_url: str
    final_host: str
    body_digest: str
    card: CardMetadata
    hops: tuple[HopRecord, ...]
    truncated: bool

    @property
    def hop_count(self) -> int:
        return len(self.hops)


def _summarize(view: UnfurlResult) -> ViewSummary:
    return ViewSummary(
        persona_label=view.persona_label,
        final_url=view.final_url,
        final_host=view.final_host,
        body_digest=view.body_digest,
        card=view.card,
        hops=tuple(
            HopRecord(url=h.url, status=h.status, kind=h.kind.value, location=h.location)
            for h in view.chain.hops
        ),
        truncated=view.chain.truncated,
    )


@dataclass(frozen=True)
class ChainFlag:
    view: str  # "crawler" | "browser"
    hop_index: int
    host: str
    finding: Finding


@dataclass(frozen=True)
class DivergenceReport:
    url: str
    crawler_view: ViewSummary | None
    browser_view: ViewSummary | None
    final_host_mismatch: bool
    metadata_similarity: float
    content_similarity: float
    card_page_consistency: float
    chain_flags: tuple[ChainFlag, ...]
    verdict: Verdict
    direct_link: bool | None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        for name in (
            "metadata_similarity",
            "content_similarity",
            "card_page_consistency",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of [0,1]: {value}")


def _host_of(url: str) -> str:
    return (urlsplit(url).hostname or "").lower()


def _same_registrable(host_a: str, host_b: str, exact: bool) -> bool:
    if exact:
        return host_a == host_b
    return hosts.registrable_host(host_a) == hosts.registrable_host(host_b)


def differential_scan(
    url: str,
    fetcher: Fetcher,
    crawler: Persona,
    browser: Persona,
    profile: PlatformProfile,
    rep: ReputationList = EMPTY_REPUTATION,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    strict_direct: bool = False,
    exact_host_compare: bool = False,
) -> DivergenceReport:
    """Fetch as crawler and as browser, compare the two views, rule.

    One-sided fetch failure is itself a divergence signal and yields
    CloakingSuspected with a partial-report flag; a two-sided failure
    propagates NetworkError.
    """
    if crawler.user_agent == browser.user_agent:
        raise ValueError("crawler and browser personas must differ in user_agent")

    crawler_view: UnfurlResult | None = None
    browser_view: UnfurlResult | None = None
    errors: list[str] = []
    try:
        crawler_view = unfurl(url, fetcher, crawler, profile)
    except NetworkError as exc:
        errors.append(f"crawler view failed: {exc}")
    try:
        browser_view = unfurl(url, fetcher, browser, profile)
    except NetworkError as exc:
        errors.append(f"browser view failed: {exc}")

    if crawler_view is None and browser_view is None:
        raise NetworkError("; ".join(errors))

    flags: list[str] = []
    chain_flags: list[ChainFlag] = []
    for label, view in (("crawler", crawler_view), ("browser", browser_view)):
        if view is not None:
            for f in reputation_check(view.chain, rep):
                chain_flags.append(ChainFlag(label, f.hop_index, f.host, f.finding))
            if view.js_redirect_suspected:
                flags.append(f"js-redirect-suspected:{label}")

    if crawler_view is None or browser_view is None:
        flags.append("partial-report")
        flags.extend(errors)
        only = crawler_view or browser_view
        verdict = Verdict.CLOAKING_SUSPECTED
        if any(cf.finding is Finding.DENIED for cf in chain_flags):
            verdict = Verdict.DENIED
        return DivergenceReport(
            url=url,
            crawler_view=_summarize(crawler_view) if crawler_view else None,
            browser_view=_summarize(browser_view) if browser_view else None,
            final_host_mismatch=True,
            metadata_similarity=0.0,
            content_similarity=0.0,
            card_page_consistency=0.0,
            chain_flags=tuple(chain_flags),
            verdict=verdict,
            direct_link=direct_link_gate(only.chain) if strict_direct else None,
            flags=tuple(flags),
        )

    mismatch = not _same_registrable(
        crawler_view.final_host, browser_view.final_host, exact_host_compare
    )

    if crawler_view.body_digest == browser_view.body_digest:
        content_similarity = 1.0
    else:
        content_similarity = token_jaccard(
            normalize_tokens(visible_text(crawler_view.body)),
            normalize_tokens(visible_text(browser_view.body)),
        )

    metadata_similarity = token_jaccard(
        normalize_tokens(crawler_view.card.text),
        normalize_tokens(browser_view.card.text),
    )

    browser_page_text = visible_text(browser_view.body)
    card_page_consistency = consistency_audit(crawler_view.card, browser_page_text)
    if audit_insufficient(crawler_view.card, browser_page_text):
        flags.append("insufficient-data:card-page-consistency")

    direct_link = direct_link_gate(browser_view.chain) if strict_direct else None

    # Verdict decision table, priority order.
    browser_final_finding = rep.classify(browser_view.final_host)
    card_host = _host_of(crawler_view.card.canonical_url)
    if any(cf.finding is Finding.DENIED for cf in chain_flags):
        verdict = Verdict.DENIED
    elif mismatch or content_similarity < thresholds.t_content:
        verdict = Verdict.CLOAKING_SUSPECTED
    elif (
        len(browser_view.chain.hops) > 1
        and chain_crosses_registrable_boundary(browser_view.chain)
        and browser_final_finding is Finding.UNKNOWN
        and card_host
        and not _same_registrable(card_host, browser_view.final_host, exact_host_compare)
    ):
        verdict = Verdict.REDIRECT_LAUNDERING
    elif card_page_consistency < thresholds.t_card:
        verdict = Verdict.INCONSISTENT_CARD
    else:
        verdict = Verdict.BENIGN

    if strict_direct and direct_link is False:
        flags.append("strict-direct-failed")
        if verdict in (Verdict.BENIGN, Verdict.INCONSISTENT_CARD):
            verdict = Verdict.REDIRECT_LAUNDERING

    return DivergenceReport(
        url=url,
        crawler_view=_summarize(crawler_view),
        browser_view=_summarize(browser_view),
        final_host_mismatch=mismatch,
        metadata_similarity=metadata_similarity,
        content_similarity=content_similarity,
        card_page_consistency=card_page_consistency,
        chain_flags=tuple(chain_flags),
        verdict=verdict,
        direct_link=direct_link,
        flags=tuple(flags),
    )
