"""HTTP API exposing unfurl, scan, recrawl, and the SDK emulator.

Built on the stdlib threading HTTP server; the handlers call the same
AppState operations as the CLI.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable
from urllib.parse import parse_qs, urlsplit

from .app import AppState
from .errors import (
    AuthFailed,
    InvalidDomain,
    NetworkError,
    TokenExpired,
    UnknownApp,
    UnsupportedScheme,
)
from .report import SCHEMA_VERSION, TOOL_VERSION, serialize_scan_report
from .cards import card_record
from .sdk import SdkCardRequest, SdkMode


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail


def _require_url(params: dict, key: str = "url") -> str:
    values = params.get(key) or []
    url = values[0] if values else ""
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.hostname:
        raise ServiceError(
            400, "invalid_url", f"parameter {key!r} must be an absolute http(s) URL",
            detail=url,
        )
    return url


class _ServiceHandler(BaseHTTPRequestHandler):
    server: CardwatchService
    server_version = "cardwatch"

    def log_message(self, *args):
        pass

    # -- plumbing -----------------------------------------------------------

    def _send(self, status: int, body: bytes, content_type="application/json"):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: dict):
        self._send(status, (json.dumps(payload, ensure_ascii=False) + "\n").encode())

    def _send_error_body(self, err: ServiceError):
        self._send_json(
            err.status,
            {"code": err.code, "message": str(err), "detail": err.detail},
        )

    def _read_json_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except ValueError as exc:
            raise ServiceError(400, "invalid_json", f"request body is not JSON: {exc}")
        if not isinstance(data, dict):
            raise ServiceError(400, "invalid_json", "request body must be an object")
        return data

    def _dispatch(self, method: str):
        parts = urlsplit(self.path)
        params = parse_qs(parts.query)
        route = (method, parts.path)
        try:
            handler = _ROUTES.get(route)
            if handler is None:
                raise ServiceError(404, "not_found", f"no such endpoint: {parts.path}")
            handler(self, params)
        except ServiceError as err:
            self._send_error_body(err)
        except (AuthFailed, TokenExpired) as exc:
            self._send_error_body(ServiceError(401, "auth_failed", str(exc)))
        except UnknownApp as exc:
            self._send_error_body(ServiceError(404, "unknown_app", str(exc)))
        except InvalidDomain as exc:
            self._send_error_body(ServiceError(400, "invalid_domain", str(exc)))
        except UnsupportedScheme as exc:
            self._send_error_body(ServiceError(400, "invalid_url", str(exc)))
        except NetworkError as exc:
            self._send_error_body(
                ServiceError(
                    502,
                    "network_error",
                    str(exc),
                    detail=f"{len(exc.partial_hops)} hop(s) recorded before failure",
                )
            )

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    # -- endpoints ----------------------------------------------------------

    def _ep_health(self, params):
        self._send_json(
            200,
            {
                "schema_version": SCHEMA_VERSION,
                "status": "ok",
                "version": TOOL_VERSION,
            },
        )

    def _ep_unfurl(self, params):
        url = _require_url(params)
        profile = (params.get("profile") or [None])[0]
        persona = (params.get("persona") or [None])[0]
        result = self.server.state.unfurl(url, profile=profile, persona=persona)
        self._send_json(
            200,
            {
                "schema_version": SCHEMA_VERSION,
                "url": url,
                "final_url": result.final_url,
                "card": card_record(result.card),
                "hops": [
                    {
                        "url": h.url,
                        "status": h.status,
                        "kind": h.kind.value,
                        "location": h.location,
                    }
                    for h in result.chain.hops
                ],
                "truncated": result.chain.truncated,
            },
        )

    def _ep_scan(self, params):
        url = _require_url(params)
        profile = (params.get("profile") or [None])[0]
        strict = (params.get("strict_direct") or [None])[0]
        strict_direct = None if strict is None else strict in ("1", "true", "yes")
        scan = self.server.state.scan(
            url,
            profile=profile,
            strict_direct=strict_direct,
            scanned_at=self.server.clock() if self.server.clock else None,
        )
        # Byte-identical to the CLI report for the same inputs and clock.
        self._send(200, (serialize_scan_report(scan) + "\n").encode())

    def _ep_recrawl(self, params):
        body = self._read_json_body()
        url = _require_url({"url": [body.get("url", "")]})
        card = self.server.state.recrawl(url, profile=body.get("profile"))
        self._send_json(
            200, {"schema_version": SCHEMA_VERSION, "url": url, "card": card_record(card)}
        )

    def _ep_sdk_register(self, params):
        body = self._read_json_body()
        domains = body.get("registered_domains")
        if not isinstance(domains, list):
            raise ServiceError(
                400, "invalid_request", "registered_domains must be a list"
            )
        registration = self.server.state.sdk.register_app(domains)
        self._send_json(
            200,
            {
                "schema_version": SCHEMA_VERSION,
                "app_id": registration.app_id,
                "app_secret": registration.app_secret,
                "registered_domains": sorted(registration.registered_domains),
            },
        )

    def _ep_sdk_token(self, params):
        body = self._read_json_body()
        token = self.server.state.sdk.issue_token(
            body.get("app_id", ""), body.get("app_secret", "")
        )
        self._send_json(
            200,
            {
                "schema_version": SCHEMA_VERSION,
                "token": token.token,
                "app_id": token.app_id,
                "expires_at": token.expires_at,
            },
        )

    def _ep_sdk_card(self, params):
        body = self._read_json_body()
        mode_name = ((params.get("mode") or [None])[0] or body.get("mode") or "flawed")
        try:
            mode = SdkMode(mode_name.capitalize())
        except ValueError:
            raise ServiceError(400, "invalid_mode", f"unknown mode: {mode_name!r}")
        req = SdkCardRequest(
            token=body.get("token", ""),
            title=body.get("title", ""),
            description=body.get("description", ""),
            image_url=body.get("image_url"),
            jump_link=_require_url({"url": [body.get("jump_link", "")]}),
        )
        decision, card = self.server.state.sdk.create_card(
            req, mode, fetcher=self.server.state.fetcher
        )
        self._send_json(
            200,
            {
                "schema_version": SCHEMA_VERSION,
                "accepted": decision.accepted,
                "mode": decision.mode.value,
                "reason": decision.reason,
                "resolved_final_host": decision.resolved_final_host,
                "card": card_record(card) if card else None,
            },
        )


_ROUTES: dict[tuple[str, str], Callable] = {
    ("GET", "/v1/health"): _ServiceHandler._ep_health,
    ("GET", "/v1/unfurl"): _ServiceHandler._ep_unfurl,
    ("GET", "/v1/scan"): _ServiceHandler._ep_scan,
    ("POST", "/v1/recrawl"): _ServiceHandler._ep_recrawl,
    ("POST", "/v1/sdk/register"): _ServiceHandler._ep_sdk_register,
    ("POST", "/v1/sdk/token"): _ServiceHandler._ep_sdk_token,
    ("POST", "/v1/sdk/card"): _ServiceHandler._ep_sdk_card,
}


class CardwatchService(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        state: AppState,
        bind: tuple[str, int] = ("127.0.0.1", 0),
        clock: Callable[[], str] | None = None,
    ):
        self.state = state
        self.clock = clock
        super().__init__(bind, _ServiceHandler)

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def stop(self):
        self.shutdown()
        self.server_close()
