from __future__ import annotations

import pytest

from cardwatch.app import AppState
from cardwatch.config import load_config
from cardwatch.fetcher import Fetcher
from cardwatch.lab import builtin_scenario, lab_start

SCENARIO_URLS = {
    "benign": "http://benign.local/index",
    "shortlink": "http://benign.local/jump2mal",
    "cloaking": "http://domain.local/",
    "mismatch": "http://mismatch.local/",
}


@pytest.fixture
def lab():
    """Factory starting builtin or custom scenarios; stops them at teardown."""
    handles = []

    def start(scenario):
        if isinstance(scenario, str):
            scenario = builtin_scenario(scenario)
        handle = lab_start(scenario)
        handles.append(handle)
        return handle

    yield start
    for handle in handles:
        handle.stop()


@pytest.fixture
def make_fetcher():
    def build(handle, **kwargs):
        return Fetcher(resolver=handle.alias_map, **kwargs)

    return build


@pytest.fixture
def make_state():
    def build(handle, config=None):
        return AppState.from_config(
            config or load_config(env={}), resolver=handle.alias_map
        )

    return build
