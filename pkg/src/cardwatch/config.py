"""Operator configuration: personas, profiles, thresholds, limits.

Config files are JSON. Loading is fail-closed: unknown keys raise, and
referenced files must exist. Every scalar key can be overridden through
an environment variable named CARDWATCH_<SECTION>_<KEY>.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .cards import BUILTIN_PROFILES, PlatformProfile, profile_from_dict
from .detector import ReputationList, Thresholds
from .errors import ConfigError
from .fetcher import BUILTIN_PERSONAS, FetchLimits, Persona, PersonaLabel

ENV_PREFIX = "CARDWATCH_"

_TOP_KEYS = {
    "personas",
    "profiles",
    "thresholds",
    "limits",
    "reputation_files",
    "cache",
    "strict_direct",
    "proxy",
}
_SECTION_KEYS = {
    "thresholds": {"t_content", "t_card"},
    "limits": {"max_hops", "timeout", "max_body"},
    "cache": {"ttl", "persistence_path"},
}

# Env names for scalar leaves, generated from the section tables plus
# the top-level scalars.
_ENV_PATHS: dict[str, tuple[str, ...]] = {}
for _section, _keys in _SECTION_KEYS.items():
    for _key in _keys:
        _ENV_PATHS[f"{ENV_PREFIX}{_section}_{_key}".upper()] = (_section, _key)
_ENV_PATHS[f"{ENV_PREFIX}STRICT_DIRECT"] = ("strict_direct",)
_ENV_PATHS[f"{ENV_PREFIX}PROXY"] = ("proxy",)
_ENV_PATHS[f"{ENV_PREFIX}REPUTATION_FILES"] = ("reputation_files",)


@dataclass
class Config:
    personas: dict[str, Persona] = field(
        default_factory=lambda: dict(BUILTIN_PERSONAS)
    )
    profiles: dict[str, PlatformProfile] = field(
        default_factory=lambda: dict(BUILTIN_PROFILES)
    )
    thresholds: Thresholds = field(default_factory=Thresholds)
    limits: FetchLimits = field(default_factory=FetchLimits)
    reputation: ReputationList = field(default_factory=ReputationList)
    strict_direct: bool = False
    cache_ttl: float = 24 * 3600.0
    cache_persistence: Path | None = None
    proxy: tuple[str, int] | None = None

    def persona(self, name: str) -> Persona:
        try:
            return self.personas[name]
        except KeyError:
            raise ConfigError(f"unknown persona: {name!r}") from None

    def profile(self, name: str) -> PlatformProfile:
        try:
            return self.profiles[name]
        except KeyError:
            raise ConfigError(f"unknown profile: {name!r}") from None


def _check_keys(data: dict, allowed: set[str], where: str):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _parse_persona(name: str, data: dict) -> Persona:
    _check_keys(data, {"label", "user_agent", "extra_headers"}, f"persona {name!r}")
    try:
        return Persona(
            label=PersonaLabel(data.get("label", "Custom")),
            user_agent=data["user_agent"],
            extra_headers=tuple(
                (n, v) for n, v in (data.get("extra_headers") or [])
            ),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad persona {name!r}: {exc}") from exc


def _apply_env(raw: dict, env) -> dict:
    for var, path in _ENV_PATHS.items():
        if var not in env:
            continue
        value = env[var]
        try:
            parsed = json.loads(value)
        except ValueError:
            parsed = value
        node = raw
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = parsed
    return raw


def _parse_proxy(value) -> tuple[str, int] | None:
    if value in (None, "", "none"):
        return None
    if isinstance(value, str):
        host, _, port = value.rpartition(":")
        if not host:
            raise ConfigError(f"proxy must be host:port, got {value!r}")
        return host, int(port)
    raise ConfigError(f"proxy must be a string, got {value!r}")


def parse_config(raw: dict, base_dir: Path | None = None) -> Config:
    _check_keys(raw, _TOP_KEYS, "config")
    for section, keys in _SECTION_KEYS.items():
        if section in raw:
            if not isinstance(raw[section], dict):
                raise ConfigError(f"{section} must be an object")
            _check_keys(raw[section], keys, section)

    config = Config()
    for name, data in (raw.get("personas") or {}).items():
        config.personas[name] = _parse_persona(name, data)
    for data in raw.get("profiles") or []:
        profile = profile_from_dict(data)
        config.profiles[profile.name] = profile

    thresholds = raw.get("thresholds") or {}
    try:
        config.thresholds = Thresholds(
            t_content=float(thresholds.get("t_content", 0.80)),
            t_card=float(thresholds.get("t_card", 0.30)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    limits = raw.get("limits") or {}
    try:
        config.limits = FetchLimits(
            max_hops=int(limits.get("max_hops", 10)),
            timeout=float(limits.get("timeout", 10.0)),
            max_body=int(limits.get("max_body", 2 * 1024 * 1024)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rep_files = raw.get("reputation_files") or []
    if isinstance(rep_files, str):
        rep_files = [rep_files]
    denied: set[str] = set()
    allowed: set[str] = set()
    for rel in rep_files:
        path = Path(rel)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"reputation file not found: {path}")
        part = ReputationList.from_file(path)
        denied |= part.denied_hosts
        allowed |= part.allowed_hosts
    try:
        config.reputation = ReputationList(frozenset(denied), frozenset(allowed))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cache = raw.get("cache") or {}
    config.cache_ttl = float(cache.get("ttl", config.cache_ttl))
    persistence = cache.get("persistence_path")
    if persistence:
        path = Path(persistence)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        config.cache_persistence = path

    config.strict_direct = bool(raw.get("strict_direct", False))
    config.proxy = _parse_proxy(raw.get("proxy"))
    return config


def load_config(
    path: str | Path | None = None, env: dict | None = None
) -> Config:
    """Load config from a JSON file (or defaults) with env overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    base_dir: Path | None = None
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text("utf-8"))
        except ValueError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        base_dir = path.parent
    raw = _apply_env(raw, env)
    return parse_config(raw, base_dir=base_dir)
