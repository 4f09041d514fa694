from __future__ import annotations

import pytest

from cardwatch.hosts import (
    PublicSuffixList,
    host_matches_pattern,
    registrable_host,
)


@pytest.mark.parametrize(
    "host,expected",
    [
        ("example.com", "example.com"),
        ("www.example.com", "example.com"),
        ("a.b.example.com", "example.com"),
        ("example.co.uk", "example.co.uk"),
        ("deep.sub.example.co.uk", "example.co.uk"),
        ("benign.local", "benign.local"),
        ("a.b.benign.local", "benign.local"),
        ("malicious.local", "malicious.local"),
        ("com", "com"),
        ("unknown-tld-host.zz", "unknown-tld-host.zz"),
        ("sub.unknown-tld-host.zz", "unknown-tld-host.zz"),
        ("Example.COM.", "example.com"),
    ],
)
def test_registrable_host(host, expected):
    assert registrable_host(host) == expected


def test_wildcard_and_exception_rules():
    # *.ck is a wildcard suffix; www.ck is the exception.
    assert registrable_host("shop.anything.ck") == "shop.anything.ck"
    assert registrable_host("deep.shop.anything.ck") == "shop.anything.ck"
    assert registrable_host("www.ck") == "www.ck"
    assert registrable_host("sub.www.ck") == "www.ck"


def test_custom_rule_list():
    psl = PublicSuffixList(["com", "co.jp", "// a comment", ""])
    assert psl.registrable_host("x.y.co.jp") == "y.co.jp"
    assert psl.public_suffix("x.y.co.jp") == "co.jp"


@pytest.mark.parametrize(
    "host,pattern,expected",
    [
        ("malicious.local", "malicious.local", True),
        ("Malicious.LOCAL", "malicious.local", True),
        ("sub.malicious.local", "malicious.local", False),
        ("a.b.evil.test", "*.evil.test", True),
        ("evil.test", "*.evil.test", True),
        ("notevil.test", "*.evil.test", False),
        ("evil.test.other", "*.evil.test", False),
    ],
)
def test_host_matches_pattern(host, pattern, expected):
    assert host_matches_pattern(host, pattern) is expected
