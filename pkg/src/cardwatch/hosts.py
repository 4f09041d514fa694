"""Hostname utilities: registrable-domain computation and pattern matching.

The registrable host of ``a.b.example.co.uk`` is ``example.co.uk``: the
public suffix plus one label. Suffixes come from a bundled snapshot of the
public suffix list so comparisons stay hermetic and offline.
"""

from __future__ import annotations

from importlib import resources

_SNAPSHOT_NAME = "public_suffix_snapshot.dat"


def _normalize_host(host: str) -> str:
    return host.strip().strip(".").lower()


class PublicSuffixList:
    """Suffix rules in public_suffix_list.dat format.

    Supports plain rules, ``*`` wildcard labels, and ``!`` exceptions.
    Hosts whose TLD has no rule fall back to the implicit ``*`` rule
    (the last label is the suffix).
    """

    def __init__(self, rules: list[str]):
        self._plain: set[str] = set()
        self._wildcard: set[str] = set()  # rule minus leading "*."
        self._exception: set[str] = set()  # rule minus leading "!"
        for raw in rules:
            rule = raw.strip().lower()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self._exception.add(rule[1:])
            elif rule.startswith("*."):
                self._wildcard.add(rule[2:])
            else:
                self._plain.add(rule)

    @classmethod
    def bundled(cls) -> PublicSuffixList:
        text = (
            resources.files(__package__).joinpath(_SNAPSHOT_NAME).read_text("utf-8")
        )
        return cls(text.splitlines())

    def public_suffix(self, host: str) -> str:
        host = _normalize_host(host)
        labels = host.split(".")
        # Longest match wins; exceptions beat wildcards.
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self._exception:
                return ".".join(labels[i + 1:])
            parent = ".".join(labels[i + 1:])
            if parent and parent in self._wildcard:
                return candidate
            if candidate in self._plain:
                return candidate
        return labels[-1]

    def registrable_host(self, host: str) -> str:
        """Suffix plus one label; the bare suffix maps to itself."""
        host = _normalize_host(host)
        suffix = self.public_suffix(host)
        if host == suffix:
            return host
        prefix = host[: -(len(suffix) + 1)]
        return prefix.split(".")[-1] + "." + suffix


_DEFAULT_PSL: PublicSuffixList | None = None


def default_psl() -> PublicSuffixList:
    global _DEFAULT_PSL
    if _DEFAULT_PSL is None:
        _DEFAULT_PSL = PublicSuffixList.bundled()
    return _DEFAULT_PSL


def registrable_host(host: str) -> str:
    return default_psl().registrable_host(host)


def host_matches_pattern(host: str, pattern: str) -> bool:
    """Match a hostname against an exact or ``*.suffix`` pattern.

    ``*.x`` matches ``x`` itself and any subdomain of ``x``; matching is
    case-insensitive.
    """
    host = _normalize_host(host)
    pattern = _normalize_host(pattern)
    if pattern.startswith("*."):
        suffix = pattern[2:]
        return host == suffix or host.endswith("." + suffix)
    return host == pattern
