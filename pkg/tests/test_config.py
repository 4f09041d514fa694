from __future__ import annotations

import json

import pytest

from cardwatch.config import Config, load_config, parse_config
from cardwatch.errors import ConfigError
from cardwatch.fetcher import PersonaLabel


def _write(tmp_path, data):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), "utf-8")
    return path


def test_defaults():
    config = load_config(env={})
    assert "crawler" in config.personas and "browser" in config.personas
    assert "twitter-like" in config.profiles and "og-generic" in config.profiles
    assert config.thresholds.t_content == 0.80
    assert config.thresholds.t_card == 0.30
    assert config.strict_direct is False
    assert config.proxy is None


def test_unknown_top_level_key_rejected(tmp_path):
    path = _write(tmp_path, {"treshold": {"t_card": 0.2}})
    with pytest.raises(ConfigError, match="treshold"):
        load_config(path, env={})


def test_unknown_section_key_rejected(tmp_path):
    path = _write(tmp_path, {"thresholds": {"t_card": 0.2, "t_crad": 0.3}})
    with pytest.raises(ConfigError, match="t_crad"):
        load_config(path, env={})


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.json", env={})


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", "utf-8")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(path, env={})


def test_sections_parsed(tmp_path):
    path = _write(
        tmp_path,
        {
            "thresholds": {"t_content": 0.9, "t_card": 0.25},
            "limits": {"max_hops": 4, "timeout": 3.5, "max_body": 1024},
            "cache": {"ttl": 60, "persistence_path": "cache.log"},
            "strict_direct": True,
        },
    )
    config = load_config(path, env={})
    assert config.thresholds.t_content == 0.9
    assert config.thresholds.t_card == 0.25
    assert config.limits.max_hops == 4
    assert config.limits.timeout == 3.5
    assert config.limits.max_body == 1024
    assert config.cache_ttl == 60.0
    assert config.cache_persistence == tmp_path / "cache.log"
    assert config.strict_direct is True


def test_custom_persona_and_profile(tmp_path):
    path = _write(
        tmp_path,
        {
            "personas": {
                "probe": {
                    "label": "Custom",
                    "user_agent": "ProbeAgent/9.9",
                    "extra_headers": [["Accept-Language", "en"]],
                }
            },
            "profiles": [
                {
                    "name": "og-only",
                    "tag_precedence": ["OpenGraph"],
                    "crawler_user_agent": "ProbeAgent/9.9",
                }
            ],
        },
    )
    config = load_config(path, env={})
    persona = config.persona("probe")
    assert persona.label is PersonaLabel.CUSTOM
    assert persona.user_agent == "ProbeAgent/9.9"
    assert persona.extra_headers == (("Accept-Language", "en"),)
    profile = config.profile("og-only")
    assert [ns.value for ns in profile.tag_precedence] == ["OpenGraph"]


def test_unknown_persona_or_profile_lookup():
    config = Config()
    with pytest.raises(ConfigError):
        config.persona("ghost")
    with pytest.raises(ConfigError):
        config.profile("ghost")


def test_bad_persona_rejected(tmp_path):
    path = _write(tmp_path, {"personas": {"bad": {"label": "Custom"}}})
    with pytest.raises(ConfigError, match="bad persona"):
        load_config(path, env={})


def test_reputation_file_loaded(tmp_path):
    (tmp_path / "rep.txt").write_text(
        "# deny list\nmalicious.local\n!trusted.local\n", "utf-8"
    )
    path = _write(tmp_path, {"reputation_files": ["rep.txt"]})
    config = load_config(path, env={})
    assert "malicious.local" in config.reputation.denied_hosts
    assert "trusted.local" in config.reputation.allowed_hosts


def test_reputation_file_must_exist(tmp_path):
    path = _write(tmp_path, {"reputation_files": ["nope.txt"]})
    with pytest.raises(ConfigError, match="reputation file not found"):
        load_config(path, env={})


def test_env_overrides_scalars(tmp_path):
    path = _write(tmp_path, {"thresholds": {"t_content": 0.5}})
    env = {
        "CARDWATCH_THRESHOLDS_T_CONTENT": "0.95",
        "CARDWATCH_LIMITS_MAX_HOPS": "3",
        "CARDWATCH_STRICT_DIRECT": "true",
        "CARDWATCH_PROXY": "proxy.test:3128",
    }
    config = load_config(path, env=env)
    assert config.thresholds.t_content == 0.95
    assert config.limits.max_hops == 3
    assert config.strict_direct is True
    assert config.proxy == ("proxy.test", 3128)


def test_env_overrides_without_file():
    config = load_config(env={"CARDWATCH_CACHE_TTL": "7"})
    assert config.cache_ttl == 7.0


def test_proxy_parse_errors():
    with pytest.raises(ConfigError):
        parse_config({"proxy": "noport"})
    with pytest.raises(ConfigError):
        parse_config({"proxy": 8080})


def test_bad_threshold_value_rejected(tmp_path):
    path = _write(tmp_path, {"thresholds": {"t_card": 1.5}})
    with pytest.raises(ConfigError):
        load_config(path, env={})
