from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from cardwatch.cards import (
    BUILTIN_PROFILES,
    CardMetadata,
    Namespace,
    OG_GENERIC_PROFILE,
    PlatformProfile,
    TWITTER_LIKE_PROFILE,
    TagBag,
    card_record,
    extract_tags,
    parse_card_record,
    render_card,
    render_snippet,
    resolve_card,
)

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
CORPUS_CASES = json.loads((FIXTURES / "corpus_expected.json").read_text("utf-8"))


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("case", CORPUS_CASES, ids=lambda c: c["file"])
def test_corpus_golden(case):
    data = (CORPUS / case["file"]).read_bytes()
    bag = extract_tags(data, case["base_url"])
    assert bag.values == case["tags"]
    assert set(bag.truncated) == set(case["truncated"])


def test_corpus_is_large_enough():
    assert len(CORPUS_CASES) >= 30


def test_og_title_simple():
    bag = extract_tags(b'<meta property="og:title" content="Hello">', "http://a.test/")
    assert bag.values == {"og:title": "Hello"}


def test_twitter_card_tag():
    bag = extract_tags(b'<meta name="twitter:card" content="summary">', "http://a.test/")
    assert bag.values == {"twitter:card": "summary"}


def test_duplicate_first_wins():
    html = b'<meta property="og:title" content="A"><meta property="og:title" content="B">'
    assert extract_tags(html, "http://a.test/").get("og:title") == "A"


def test_empty_input_yields_empty_bag():
    bag = extract_tags(b"", "http://a.test/")
    assert len(bag) == 0


def test_attribute_order_and_case_insensitive():
    variants = [
        b'<meta property="og:title" content="V">',
        b'<meta content="V" property="og:title">',
        b'<META PROPERTY="og:title" CONTENT="V">',
        b'<meta PrOpErTy="OG:title" content="V">',
    ]
    for html in variants:
        assert extract_tags(html, "http://a.test/").get("og:title") == "V"


def test_value_preserved_verbatim_except_trim():
    html = b'<meta property="og:title" content="  MiXeD CaSe  VALUE  ">'
    assert extract_tags(html, "http://a.test/").get("og:title") == "MiXeD CaSe  VALUE"


def test_never_invents_values():
    html = b"<html><head><title>T</title></head><body>words here</body></html>"
    bag = extract_tags(html, "http://a.test/")
    assert set(bag.values) == {"fallback:title"}


# ---------------------------------------------------------------------------
# resolution
# ---------------------------------------------------------------------------


def _bag(**values):
    return TagBag(values={k.replace("__", ":"): v for k, v in values.items()})


def test_twitter_precedence_over_og():
    bag = _bag(twitter__title="T", og__title="O")
    card = resolve_card(bag, TWITTER_LIKE_PROFILE, "http://u.test/")
    assert card.title == "T"
    assert card.namespace is Namespace.TWITTER_CARD


def test_og_fallback_when_no_twitter():
    bag = _bag(og__title="O")
    card = resolve_card(bag, TWITTER_LIKE_PROFILE, "http://u.test/")
    assert card.title == "O"
    assert card.namespace is Namespace.OPEN_GRAPH


def test_empty_tags_yield_empty_card_with_fetch_url():
    card = resolve_card(TagBag(), TWITTER_LIKE_PROFILE, "http://u.test/p")
    assert card.is_empty
    assert card.canonical_url == "http://u.test/p"
    assert card.namespace is None


def test_canonical_defaults_to_fetch_url():
    bag = _bag(og__title="O")
    card = resolve_card(bag, TWITTER_LIKE_PROFILE, "http://u.test/page?q=1")
    assert card.canonical_url == "http://u.test/page?q=1"


def test_og_url_supplies_canonical():
    bag = _bag(og__title="O", og__url="http://other.test/canon")
    card = resolve_card(bag, TWITTER_LIKE_PROFILE, "http://u.test/")
    assert card.canonical_url == "http://other.test/canon"


def test_og_generic_ignores_twitter_tags():
    bag = _bag(twitter__title="T", fallback__title="F")
    card = resolve_card(bag, OG_GENERIC_PROFILE, "http://u.test/")
    assert card.title == "F"
    assert card.namespace is Namespace.HTML_FALLBACK


# Field -> tag name per namespace; independent restatement of the
# precedence contract used as the property-test oracle.
_ORACLE_TAGS = {
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


def _expected_field(bag: TagBag, profile: PlatformProfile, fld: str):
    for ns in profile.tag_precedence:
        tag = _ORACLE_TAGS[ns].get(fld)
        if tag and bag.get(tag):
            return bag.get(tag), ns
    return None, None


def test_precedence_property_random_tagbags():
    rng = random.Random(20260826)
    all_tags = sorted({t for m in _ORACLE_TAGS.values() for t in m.values()})
    profiles = list(BUILTIN_PROFILES.values())
    for i in range(1000):
        subset = [t for t in all_tags if rng.random() < 0.5]
        bag = TagBag(values={t: f"v{rng.randrange(1000)}-{t}" for t in subset})
        profile = rng.choice(profiles)
        card = resolve_card(bag, profile, "http://fetch.test/")
        for fld in ("title", "description", "image_url", "card_type", "canonical_url"):
            expected, ns = _expected_field(bag, profile, fld)
            actual = getattr(card, fld)
            if fld == "description" and expected is None:
                assert actual == ""
            elif fld == "canonical_url" and expected is None:
                assert actual == "http://fetch.test/"
            else:
                assert actual == expected, f"case {i}: field {fld}"
            if fld == "title":
                assert card.namespace == ns


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def test_render_deterministic():
    card = CardMetadata(canonical_url="http://u.test/", title="Hello")
    assert render_card(card) == render_card(card)
    assert render_card(card).encode() == render_card(card).encode()


def test_render_fixed_field_order():
    card = CardMetadata(canonical_url="http://u.test/", title="T")
    keys = list(card_record(card))
    assert keys == [
        "title",
        "description",
        "image_url",
        "card_type",
        "canonical_url",
        "namespace",
        "truncated_fields",
    ]


def test_empty_card_record_marks_absent():
    record = card_record(CardMetadata.empty("http://u.test/"))
    assert record["title"] is None
    assert record["image_url"] is None
    assert record["card_type"] is None
    assert record["namespace"] is None


def test_roundtrip_unicode():
    card = CardMetadata(
        canonical_url="http://u.test/", title="你好", description="wörld",
        namespace=Namespace.OPEN_GRAPH,
    )
    assert parse_card_record(render_card(card)) == card


def test_roundtrip_random_cards():
    rng = random.Random(7)
    namespaces = [None, *Namespace]
    for _ in range(200):
        ns = rng.choice(namespaces)
        card = CardMetadata(
            canonical_url=f"http://h{rng.randrange(50)}.test/p",
            title=None if ns is None else f"t{rng.randrange(100)}",
            description=rng.choice(["", "desc", "två ord"]),
            image_url=rng.choice([None, "http://img.test/i.png"]),
            card_type=rng.choice([None, "summary"]),
            namespace=ns,
            truncated_fields=tuple(rng.sample(["title", "description"], rng.randrange(3))),
        )
        assert parse_card_record(render_card(card)) == card


def test_snippet_contains_fields():
    card = CardMetadata(canonical_url="http://u.test/", title="Visible Title")
    snippet = render_snippet(card)
    assert "Visible Title" in snippet
    assert "http://u.test/" in snippet


def test_profile_validation():
    with pytest.raises(ValueError):
        PlatformProfile(name="x", tag_precedence=(), crawler_user_agent="UA")
    with pytest.raises(ValueError):
        PlatformProfile(
            name="x",
            tag_precedence=(Namespace.OPEN_GRAPH, Namespace.OPEN_GRAPH),
            crawler_user_agent="UA",
        )
    with pytest.raises(ValueError):
        PlatformProfile(
            name="x", tag_precedence=(Namespace.OPEN_GRAPH,), crawler_user_agent=""
        )
