"""URL-keyed card cache with TTL, explicit recrawl, and optional
append-only persistence.

The clock is injected so TTL behavior is deterministic under test.
"""

from __future__ import annotations

import json
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
from urllib.parse import urlsplit, urlunsplit

from .cards import CardMetadata, card_record, parse_card_record
from .errors import NetworkError

DEFAULT_TTL = 24 * 3600.0

_LEN = struct.Struct(">I")


def normalize_key(url: str) -> str:
    """Lowercase scheme+host, drop default ports, keep path/query verbatim."""
    parts = urlsplit(url)
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    port = parts.port
    if port is not None and not (
        (scheme == "http" and port == 80) or (scheme == "https" and port == 443)
    ):
        host = f"{host}:{port}"
    return urlunsplit((scheme, host, parts.path, parts.query, ""))


@dataclass(frozen=True)
class CacheEntry:
    key: str
    card: CardMetadata
    stored_at: float
    ttl: float

    def fresh_at(self, now: float) -> bool:
        return now < self.stored_at + self.ttl


class PreviewCache:
    """In-memory card cache; expired entries behave as misses and are
    evicted lazily on access."""

    def __init__(
        self,
        clock: Callable[[], float] = time.time,
        default_ttl: float = DEFAULT_TTL,
        persistence_path: str | Path | None = None,
    ):
        self._clock = clock
        self._default_ttl = default_ttl
        self._entries: dict[str, CacheEntry] = {}
        self._lock = threading.RLock()
        self._persistence_path = Path(persistence_path) if persistence_path else None
        if self._persistence_path and self._persistence_path.exists():
            self._replay(self._persistence_path)

    def get(self, url: str) -> CardMetadata | None:
        key = normalize_key(url)
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                return None
            if not entry.fresh_at(self._clock()):
                del self._entries[key]
                return None
            return entry.card

    def put(self, url: str, card: CardMetadata, ttl: float | None = None):
        key = normalize_key(url)
        entry = CacheEntry(
            key=key,
            card=card,
            stored_at=self._clock(),
            ttl=self._default_ttl if ttl is None else ttl,
        )
        with self._lock:
            self._entries[key] = entry
            if self._persistence_path:
                self._append(entry)

    def recrawl(self, url: str, unfurl_fn: Callable[[str], CardMetadata]) -> CardMetadata:
        """Unconditionally refetch; the prior entry survives a fetch failure."""
        try:
            card = unfurl_fn(url)
        except NetworkError:
            raise
        self.put(url, card)
        return card

    def __len__(self) -> int:
        return len(self._entries)

    # -- persistence: length-prefixed JSON records, corrupt tail dropped --

    def _append(self, entry: CacheEntry):
        payload = json.dumps(
            {
                "key": entry.key,
                "card": card_record(entry.card),
                "stored_at": entry.stored_at,
                "ttl": entry.ttl,
            },
            ensure_ascii=False,
        ).encode("utf-8")
        with open(self._persistence_path, "ab") as fh:
            fh.write(_LEN.pack(len(payload)))
            fh.write(payload)

    def _replay(self, path: Path):
        data = path.read_bytes()
        offset = 0
        while offset + _LEN.size <= len(data):
            (length,) = _LEN.unpack_from(data, offset)
            start = offset + _LEN.size
            end = start + length
            if end > len(data):
                break  # truncated trailing record
            try:
                record = json.loads(data[start:end].decode("utf-8"))
                entry = CacheEntry(
                    key=record["key"],
                    card=parse_card_record(record["card"]),
                    stored_at=float(record["stored_at"]),
                    ttl=float(record["ttl"]),
                )
            except (ValueError, KeyError, UnicodeDecodeError):
                break  # corrupt trailing record
            self._entries[entry.key] = entry
            offset = end
