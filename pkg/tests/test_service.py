from __future__ import annotations

import json
import urllib.error
import urllib.request
from urllib.parse import quote

import pytest

from cardwatch.report import serialize_scan_report
from cardwatch.service import CardwatchService

from conftest import SCENARIO_URLS


@pytest.fixture
def service(lab, make_state):
    """Start a service wired to a lab scenario; yields (base_url, state, lab_handle)."""
    servers = []

    def start(scenario, clock=None):
        handle = lab(scenario)
        state = make_state(handle)
        server = CardwatchService(state, clock=clock)
        server.start_background()
        servers.append(server)
        base = f"http://127.0.0.1:{server.server_port}"
        return base, state, handle

    yield start
    for server in servers:
        server.stop()


def _get(url):
    try:
        with urllib.request.urlopen(url, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def _post(url, payload):
    req = urllib.request.Request(
        url,
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def test_health(service):
    base, _, _ = service("benign")
    status, body = _get(f"{base}/v1/health")
    assert status == 200
    data = json.loads(body)
    assert data == {"schema_version": 1, "status": "ok", "version": "0.1.0"}


def test_unknown_endpoint_404(service):
    base, _, _ = service("benign")
    status, body = _get(f"{base}/v1/nothing")
    assert status == 404
    data = json.loads(body)
    assert set(data) == {"code", "message", "detail"}
    assert data["code"] == "not_found"


def test_unfurl_endpoint(service):
    base, _, _ = service("benign")
    status, body = _get(f"{base}/v1/unfurl?url={quote(SCENARIO_URLS['benign'])}")
    assert status == 200
    data = json.loads(body)
    assert data["card"]["title"] == "Benign Login Portal"
    assert data["hops"][0]["status"] == 200
    assert data["truncated"] is False


def test_unfurl_invalid_url_400(service):
    base, _, _ = service("benign")
    for bad in ("", "notaurl", "ftp://x/"):
        status, body = _get(f"{base}/v1/unfurl?url={quote(bad)}")
        assert status == 400
        data = json.loads(body)
        assert data["code"] == "invalid_url"
        assert set(data) == {"code", "message", "detail"}


def test_unfurl_unreachable_502_with_partial_detail(service):
    base, state, _ = service("benign")
    state.fetcher._resolver["dead.local"] = ("127.0.0.1", 1)
    status, body = _get(f"{base}/v1/unfurl?url={quote('http://dead.local/x')}")
    assert status == 502
    data = json.loads(body)
    assert data["code"] == "network_error"
    assert "hop(s) recorded" in data["detail"]


def test_scan_endpoint_matches_cli_bytes(service):
    clock = lambda: "2026-08-26T12:00:00Z"
    base, state, _ = service("cloaking", clock=clock)
    status, body = _get(f"{base}/v1/scan?url={quote(SCENARIO_URLS['cloaking'])}")
    assert status == 200
    local = state.scan(SCENARIO_URLS["cloaking"], scanned_at=clock())
    assert body == (serialize_scan_report(local) + "\n").encode("utf-8")
    assert json.loads(body)["report"]["verdict"] == "CloakingSuspected"


def test_scan_strict_direct_param(service):
    base, _, _ = service("shortlink")
    status, body = _get(
        f"{base}/v1/scan?url={quote(SCENARIO_URLS['shortlink'])}&strict_direct=1"
    )
    assert status == 200
    data = json.loads(body)
    assert data["report"]["direct_link"] is False


def test_recrawl_endpoint(service):
    base, _, handle = service("benign")
    url = "http://benign.local/mutable"
    status, body = _post(f"{base}/v1/recrawl", {"url": url})
    assert status == 200
    assert json.loads(body)["card"]["title"] == "Release Notes v1"
    handle.set_mutable_body(
        "benign.local",
        "/mutable",
        b'<meta property="og:title" content="Release Notes v2">',
    )
    status, body = _post(f"{base}/v1/recrawl", {"url": url})
    assert status == 200
    assert json.loads(body)["card"]["title"] == "Release Notes v2"


# ---------------------------------------------------------------------------
# SDK endpoints: the full register, token, create-card flow over HTTP
# ---------------------------------------------------------------------------


def test_sdk_flow_flawed_vs_mitigated(service):
    base, _, _ = service("shortlink")

    status, body = _post(
        f"{base}/v1/sdk/register", {"registered_domains": ["benign.local"]}
    )
    assert status == 200
    reg = json.loads(body)
    assert reg["registered_domains"] == ["benign.local"]

    status, body = _post(
        f"{base}/v1/sdk/token",
        {"app_id": reg["app_id"], "app_secret": reg["app_secret"]},
    )
    assert status == 200
    token = json.loads(body)["token"]

    payload = {
        "token": token,
        "title": "Great Deals",
        "description": "Save big today",
        "jump_link": "http://benign.local/jump2mal",
    }
    status, body = _post(f"{base}/v1/sdk/card?mode=flawed", payload)
    assert status == 200
    flawed = json.loads(body)
    assert flawed["accepted"] is True
    assert flawed["resolved_final_host"] is None
    assert flawed["card"]["title"] == "Great Deals"

    status, body = _post(f"{base}/v1/sdk/card?mode=mitigated", payload)
    assert status == 200
    mitigated = json.loads(body)
    assert mitigated["accepted"] is False
    assert mitigated["resolved_final_host"] == "malicious.local"
    assert mitigated["card"] is None


def test_sdk_token_bad_secret_401(service):
    base, _, _ = service("benign")
    status, body = _post(
        f"{base}/v1/sdk/register", {"registered_domains": ["benign.local"]}
    )
    reg = json.loads(body)
    status, body = _post(
        f"{base}/v1/sdk/token", {"app_id": reg["app_id"], "app_secret": "wrong"}
    )
    assert status == 401
    assert json.loads(body)["code"] == "auth_failed"


def test_sdk_register_invalid_domain_400(service):
    base, _, _ = service("benign")
    status, body = _post(f"{base}/v1/sdk/register", {"registered_domains": ["no host"]})
    assert status == 400
    assert json.loads(body)["code"] == "invalid_domain"
    status, body = _post(f"{base}/v1/sdk/register", {"registered_domains": "benign.local"})
    assert status == 400
    assert json.loads(body)["code"] == "invalid_request"


def test_sdk_card_unknown_mode_400(service):
    base, _, _ = service("benign")
    status, body = _post(
        f"{base}/v1/sdk/card?mode=sideways",
        {"token": "x", "jump_link": "http://benign.local/"},
    )
    assert status == 400
    assert json.loads(body)["code"] == "invalid_mode"


def test_invalid_json_body_400(service):
    base, _, _ = service("benign")
    req = urllib.request.Request(
        f"{base}/v1/recrawl", data=b"{broken", method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            status, body = resp.status, resp.read()
    except urllib.error.HTTPError as err:
        status, body = err.code, err.read()
    assert status == 400
    assert json.loads(body)["code"] == "invalid_json"
