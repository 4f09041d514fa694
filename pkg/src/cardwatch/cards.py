"""Sharing-card domain model: meta-tag extraction and precedence resolution.

Extraction is a tolerant streaming pass over tags (no DOM, no script
execution), mirroring how platform crawlers read page metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from html.parser import HTMLParser
from urllib.parse import urljoin

MAX_FIELD_BYTES = 4096

# Tag values that hold URLs and get resolved against the document base.
_URL_TAGS = {
    "og:url",
    "og:image",
    "og:image:url",
    "og:image:secure_url",
    "og:video",
    "og:audio",
    "twitter:url",
    "twitter:image",
    "twitter:image:src",
}


class Namespace(str, Enum):
    """Which tag family supplied a card field."""

    TWITTER_CARD = "TwitterCard"
    OPEN_GRAPH = "OpenGraph"
    HTML_FALLBACK = "HtmlFallback"


@dataclass(frozen=True)
class TagBag:
    """First-occurrence meta values keyed by namespaced tag name.

    Keys look like ``og:title``, ``twitter:card``, ``fallback:title``.
    ``truncated`` lists keys whose values exceeded MAX_FIELD_BYTES.
    """

    values: dict[str, str] = field(default_factory=dict)
    truncated: frozenset[str] = frozenset()

    def get(self, key: str) -> str | None:
        return self.values.get(key)

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, key: str) -> bool:
        return key in self.values


@dataclass(frozen=True)
class PlatformProfile:
    """A platform's crawler identity and tag-family precedence."""

    name: str
    tag_precedence: tuple[Namespace, ...]
    crawler_user_agent: str

    def __post_init__(self):
        if not self.tag_precedence:
            raise ValueError("tag_precedence must be non-empty")
        if len(set(self.tag_precedence)) != len(self.tag_precedence):
            raise ValueError("tag_precedence must be duplicate-free")
        if not self.crawler_user_agent:
            raise ValueError("crawler_user_agent must be non-empty")


TWITTER_LIKE_PROFILE = PlatformProfile(
    name="twitter-like",
    tag_precedence=(
        Namespace.TWITTER_CARD,
        Namespace.OPEN_GRAPH,
        Namespace.HTML_FALLBACK,
    ),
    crawler_user_agent="Twitterbot/1.0",
)

OG_GENERIC_PROFILE = PlatformProfile(
    name="og-generic",
    tag_precedence=(Namespace.OPEN_GRAPH, Namespace.HTML_FALLBACK),
    crawler_user_agent="facebookexternalhit/1.1",
)

BUILTIN_PROFILES = {p.name: p for p in (TWITTER_LIKE_PROFILE, OG_GENERIC_PROFILE)}


@dataclass(frozen=True)
class CardMetadata:
    """A resolved sharing card.

    ``title is None`` together with no other populated field marks the
    explicit empty card; extraction never fabricates values.
    """

    canonical_url: str
    title: str | None = None
    description: str = ""
    image_url: str | None = None
    card_type: str | None = None
    namespace: Namespace | None = None
    truncated_fields: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return (
            self.title is None
            and not self.description
            and self.image_url is None
            and self.card_type is None
        )

    @property
    def text(self) -> str:
        """Card text used by similarity checks: title plus description."""
        parts = [p for p in (self.title, self.description) if p]
        return " ".join(parts)

    @classmethod
    def empty(cls, canonical_url: str) -> CardMetadata:
        return cls(canonical_url=canonical_url)


# Per-namespace tag names for each card field.
_FIELD_TAGS: dict[Namespace, dict[str, str]] = {
    Namespace.TWITTER_CARD: {
        "title": "twitter:title",
        "description": "twitter:description",
        "image_url": "twitter:image",
        "card_type": "twitter:card",
        "canonical_url": "twitter:url",
    },
    Namespace.OPEN_GRAPH: {
        "title": "og:title",
        "description": "og:description",
        "image_url": "og:image",
        "card_type": "og:type",
        "canonical_url": "og:url",
    },
    Namespace.HTML_FALLBACK: {
        "title": "fallback:title",
        "description": "fallback:description",
    },
}


class _MetaExtractor(HTMLParser):
    """Streaming collector for meta/base/title; ignores everything else."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.raw: dict[str, str] = {}
        self.base_href: str | None = None
        self._in_title = False
        self._title_parts: list[str] = []
        self._title_done = False

    def _put(self, key: str, value: str):
        self.raw.setdefault(key, value)

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        attrmap = {}
        for name, value in attrs:
            attrmap.setdefault(name.lower(), value if value is not None else "")
        if tag == "meta":
            key = attrmap.get("property") or attrmap.get("name") or ""
            key = key.strip().lower()
            content = attrmap.get("content")
            if content is None:
                return
            if key.startswith("og:") or key.startswith("twitter:"):
                self._put(key, content.strip())
            elif key == "description":
                self._put("fallback:description", content.strip())
        elif tag == "base" and self.base_href is None:
            href = attrmap.get("href")
            if href:
                self.base_href = href.strip()
        elif tag == "title" and not self._title_done:
            self._in_title = True

    def handle_endtag(self, tag):
        if tag.lower() == "title" and self._in_title:
            self._in_title = False
            self._title_done = True

    def handle_data(self, data):
        if self._in_title:
            self._title_parts.append(data)

    def title_text(self) -> str | None:
        if not self._title_parts:
            return None
        text = "".join(self._title_parts).strip()
        return text or None


def _truncate(value: str) -> tuple[str, bool]:
    encoded = value.encode("utf-8")
    if len(encoded) <= MAX_FIELD_BYTES:
        return value, False
    return encoded[:MAX_FIELD_BYTES].decode("utf-8", "ignore"), True


def extract_tags(html: bytes, base_url: str) -> TagBag:
    """Pull og:*/twitter:* metas, <title>, and the description meta.

    Best-effort on malformed input: anything unparseable simply yields
    fewer tags, never an exception. First occurrence of a duplicate tag
    wins. Relative URL values are resolved against ``base_url`` (or a
    ``<base href>`` when present).
    """
    if isinstance(html, str):
        text = html
    else:
        text = html.decode("utf-8", "replace")
    parser = _MetaExtractor()
    try:
        parser.feed(text)
        parser.close()
    except Exception:
        pass  # keep whatever was collected before the parser gave up

    raw = dict(parser.raw)
    title = parser.title_text()
    if title is not None:
        raw.setdefault("fallback:title", title)

    base = base_url
    if parser.base_href:
        base = urljoin(base_url, parser.base_href)

    values: dict[str, str] = {}
    truncated: set[str] = set()
    for key, value in raw.items():
        if key in _URL_TAGS and value:
            value = urljoin(base, value)
        value, was_cut = _truncate(value)
        values[key] = value
        if was_cut:
            truncated.add(key)
    return TagBag(values=values, truncated=frozenset(truncated))


def resolve_card(tags: TagBag, profile: PlatformProfile, fetch_url: str) -> CardMetadata:
    """Pick each card field from the first namespace that provides it.

    ``canonical_url`` falls back to ``fetch_url`` when no URL tag is
    present under any consulted namespace.
    """
    chosen: dict[str, str] = {}
    chosen_ns: dict[str, Namespace] = {}
    truncated: list[str] = []
    for fld in ("title", "description", "image_url", "card_type", "canonical_url"):
        for ns in profile.tag_precedence:
            tag_name = _FIELD_TAGS[ns].get(fld)
            if tag_name is None:
                continue
            value = tags.get(tag_name)
            if value:
                chosen[fld] = value
                chosen_ns[fld] = ns
                if tag_name in tags.truncated:
                    truncated.append(fld)
                break

    return CardMetadata(
        canonical_url=chosen.get("canonical_url", fetch_url),
        title=chosen.get("title"),
        description=chosen.get("description", ""),
        image_url=chosen.get("image_url"),
        card_type=chosen.get("card_type"),
        namespace=chosen_ns.get("title"),
        truncated_fields=tuple(truncated),
    )


def card_record(card: CardMetadata) -> dict:
    """Machine-readable record with a fixed field order."""
    return {
        "title": card.title,
        "description": card.description,
        "image_url": card.image_url,
        "card_type": card.card_type,
        "canonical_url": card.canonical_url,
        "namespace": card.namespace.value if card.namespace else None,
        "truncated_fields": list(card.truncated_fields),
    }


def render_card(card: CardMetadata) -> str:
    """Byte-stable JSON record for a card."""
    return json.dumps(card_record(card), ensure_ascii=False, separators=(",", ":"))


def parse_card_record(record: str | dict) -> CardMetadata:
    """Inverse of render_card."""
    data = json.loads(record) if isinstance(record, str) else record
    ns = data.get("namespace")
    return CardMetadata(
        canonical_url=data["canonical_url"],
        title=data.get("title"),
        description=data.get("description") or "",
        image_url=data.get("image_url"),
        card_type=data.get("card_type"),
        namespace=Namespace(ns) if ns else None,
        truncated_fields=tuple(data.get("truncated_fields") or ()),
    )


def render_snippet(card: CardMetadata) -> str:
    """Human-readable preview snippet."""
    lines = [
        f"title:         {card.title if card.title is not None else '(absent)'}",
        f"description:   {card.description or '(absent)'}",
        f"image_url:     {card.image_url or '(absent)'}",
        f"card_type:     {card.card_type or '(absent)'}",
        f"canonical_url: {card.canonical_url}",
        f"namespace:     {card.namespace.value if card.namespace else '(absent)'}",
    ]
    if card.truncated_fields:
        lines.append(f"truncated:     {', '.join(card.truncated_fields)}")
    return "\n".join(lines)


def profile_from_dict(data: dict) -> PlatformProfile:
    """Build a profile from config data (names as in the record schema)."""
    return PlatformProfile(
        name=data["name"],
        tag_precedence=tuple(Namespace(ns) for ns in data["tag_precedence"]),
        crawler_user_agent=data["crawler_user_agent"],
    )


__all__ = [
    "Namespace",
    "TagBag",
    "PlatformProfile",
    "CardMetadata",
    "TWITTER_LIKE_PROFILE",
    "OG_GENERIC_PROFILE",
    "BUILTIN_PROFILES",
    "extract_tags",
    "resolve_card",
    "card_record",
    "render_card",
    "parse_card_record",
    "render_snippet",
    "profile_from_dict",
]
