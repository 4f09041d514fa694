"""Deterministic local HTTP servers for attack and control scenarios.

Each scenario describes one or more named hosts (aliases like
``benign.local``) with ordered route rules. Rules can match on a
User-Agent substring, serve fixed bytes, redirect, or serve a mutable
body with an HTTP mutate endpoint. Servers bind ephemeral loopback
ports; the returned alias map plugs into the fetcher's resolver.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

from .errors import InvalidScenario, PortBindError

DEFAULT_CRAWLER_TOKEN = "Twitterbot"


@dataclass(frozen=True)
class ServeBody:
    body: bytes
    content_type: str = "text/html; charset=utf-8"


@dataclass(frozen=True)
class Redirect:
    status: int
    location: str


@dataclass(frozen=True)
class MutableBody:
    initial: bytes
    content_type: str = "text/html; charset=utf-8"


@dataclass(frozen=True)
class RouteRule:
    path: str
    action: ServeBody | Redirect | MutableBody
    ua_contains: str | None = None  # None = wildcard

    @property
    def is_wildcard(self) -> bool:
        return self.ua_contains is None


@dataclass(frozen=True)
class ServerSpec:
    host_alias: str
    routes: tuple[RouteRule, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    servers: tuple[ServerSpec, ...]


@dataclass(frozen=True)
class LogEntry:
    server: str
    method: str
    path: str
    user_agent: str


def validate_scenario(scenario: Scenario) -> None:
    """Raise InvalidScenario on structural violations."""
    if not scenario.servers:
        raise InvalidScenario(f"scenario {scenario.name!r} has no servers")
    for spec in scenario.servers:
        if not spec.host_alias:
            raise InvalidScenario("server has empty host_alias")
        by_path: dict[str, list[RouteRule]] = {}
        for rule in spec.routes:
            if not rule.path.startswith("/"):
                raise InvalidScenario(f"route path must start with '/': {rule.path!r}")
            by_path.setdefault(rule.path, []).append(rule)
        for path, rules in by_path.items():
            saw_wildcard = False
            for rule in rules:
                if saw_wildcard:
                    raise InvalidScenario(
                        f"unreachable rule after wildcard for {spec.host_alias}{path}"
                    )
                if rule.is_wildcard:
                    saw_wildcard = True
            if any(not r.is_wildcard for r in rules) and not saw_wildcard:
                raise InvalidScenario(
                    f"UA-conditional route {spec.host_alias}{path} lacks a wildcard fallback"
                )


class _LabHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, handler, spec: ServerSpec, lab: LabHandle):
        self.spec = spec
        self.lab = lab
        self.mutable_bodies: dict[str, bytes] = {
            r.path: r.action.initial
            for r in spec.routes
            if isinstance(r.action, MutableBody)
        }
        super().__init__(addr, handler)


class _LabRequestHandler(BaseHTTPRequestHandler):
    server: _LabHTTPServer
    server_version = "cardwatch-lab"

    def log_message(self, *args):  # keep test output quiet
        pass

    def _record(self):
        self.server.lab._log_request(
            LogEntry(
                server=self.server.spec.host_alias,
                method=self.command,
                path=self.path,
                user_agent=self.headers.get("User-Agent", ""),
            )
        )

    def _match_rule(self, path: str) -> RouteRule | None:
        ua = self.headers.get("User-Agent", "")
        for rule in self.server.spec.routes:
            if rule.path != path:
                continue
            if rule.ua_contains is None or rule.ua_contains in ua:
                return rule
        return None

    def do_GET(self):
        self._record()
        path = urlsplit(self.path).path
        rule = self._match_rule(path)
        if rule is None:
            body = b"not found"
            self.send_response(404)
            self.send_header("Content-Type", "text/plain")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        action = rule.action
        if isinstance(action, Redirect):
            self.send_response(action.status)
            self.send_header("Location", action.location)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        if isinstance(action, MutableBody):
            body = self.server.mutable_bodies[rule.path]
            content_type = action.content_type
        else:
            body = action.body
            content_type = action.content_type
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        self._record()
        path = urlsplit(self.path).path
        if path in self.server.mutable_bodies:
            length = int(self.headers.get("Content-Length", "0"))
            self.server.mutable_bodies[path] = self.rfile.read(length)
            self.send_response(204)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        self.send_response(405)
        self.send_header("Content-Length", "0")
        self.end_headers()


@dataclass
class LabHandle:
    """Running scenario: bound servers plus the alias->port map."""

    scenario: Scenario
    alias_map: dict[str, tuple[str, int]] = field(default_factory=dict)
    _servers: list[_LabHTTPServer] = field(default_factory=list)
    _threads: list[threading.Thread] = field(default_factory=list)
    _log: list[LogEntry] = field(default_factory=list)
    _log_lock: threading.Lock = field(default_factory=threading.Lock)
    _stopped: bool = False

    def _log_request(self, entry: LogEntry):
        with self._log_lock:
            self._log.append(entry)

    def request_log(self) -> list[LogEntry]:
        with self._log_lock:
            return list(self._log)

    def url_for(self, alias: str, path: str = "/") -> str:
        if alias not in self.alias_map:
            raise KeyError(f"unknown alias: {alias}")
        return f"http://{alias}{path}"

    def set_mutable_body(self, alias: str, path: str, body: bytes):
        for server in self._servers:
            if server.spec.host_alias == alias and path in server.mutable_bodies:
                server.mutable_bodies[path] = body
                return
        raise KeyError(f"no mutable route at {alias}{path}")

    def stop(self):
        if self._stopped:
            return
        self._stopped = True
        for server in self._servers:
            server.shutdown()
            server.server_close()
        for thread in self._threads:
            thread.join(timeout=5)


def lab_start(scenario: Scenario) -> LabHandle:
    """Validate and start every server in the scenario on loopback."""
    validate_scenario(scenario)
    handle = LabHandle(scenario=scenario)
    try:
        for spec in scenario.servers:
            try:
                server = _LabHTTPServer(
                    ("127.0.0.1", 0), _LabRequestHandler, spec, handle
                )
            except OSError as exc:
                raise PortBindError(str(exc)) from exc
            thread = threading.Thread(
                target=server.serve_forever,
                name=f"lab-{spec.host_alias}",
                daemon=True,
            )
            thread.start()
            handle._servers.append(server)
            handle._threads.append(thread)
            handle.alias_map[spec.host_alias] = ("127.0.0.1", server.server_port)
    except Exception:
        handle.stop()
        raise
    return handle


def lab_stop(handle: LabHandle):
    handle.stop()


def lab_request_log(handle: LabHandle) -> list[LogEntry]:
    return handle.request_log()


# --------------------------------------------------------------------------
# Builtin scenarios
# --------------------------------------------------------------------------

BENIGN_PAGE = b"""<!doctype html>
<html><head>
<title>Benign Portal</title>
<meta property="og:title" content="Benign Login Portal">
<meta property="og:description" content="Sign in to the benign portal account area">
<meta property="og:image" content="http://benign.local/static/logo.png">
<meta property="og:url" content="http://benign.local/index">
</head>
<body>
<h1>Benign Login Portal</h1>
<p>Sign in to the benign portal account area to manage your settings.</p>
</body></html>
"""

CLOAK_BENIGN_PAGE = b"""<!doctype html>
<html><head>
<title>Daily Cooking Digest</title>
<meta property="og:title" content="Daily Cooking Digest">
<meta property="og:description" content="Fresh seasonal recipes and kitchen tips every morning">
<meta property="og:image" content="http://domain.local/img/cover.png">
</head>
<body>
<h1>Daily Cooking Digest</h1>
<p>Fresh seasonal recipes and kitchen tips every morning.</p>
</body></html>
"""

MALICIOUS_PAGE = b"""<!doctype html>
<html><head><title>Account Verification Required</title></head>
<body>
<h1>Verify your credentials immediately</h1>
<form action="/collect" method="post">
<input name="username"><input name="password" type="password">
</form>
</body></html>
"""

MISMATCH_PAGE = b"""<!doctype html>
<html><head>
<title>Puppy Photos Gallery</title>
<meta property="og:title" content="Adorable Puppy Photos Gallery">
<meta property="og:description" content="Cute golden retriever puppies playing outside">
</head>
<body>
<h1>Limited offer crypto doubling</h1>
<p>Transfer coins now, guaranteed returns, withdraw instantly, zero risk.</p>
</body></html>
"""

MUTABLE_PAGE_V1 = b"""<!doctype html>
<html><head>
<title>Release Notes</title>
<meta property="og:title" content="Release Notes v1">
<meta property="og:description" content="What changed in version one">
</head>
<body><h1>Release Notes v1</h1><p>What changed in version one.</p></body></html>
"""


def _benign_scenario() -> Scenario:
    return Scenario(
        name="benign",
        servers=(
            ServerSpec(
                host_alias="benign.local",
                routes=(
                    RouteRule(path="/", action=ServeBody(BENIGN_PAGE)),
                    RouteRule(path="/index", action=ServeBody(BENIGN_PAGE)),
                    RouteRule(path="/mutable", action=MutableBody(MUTABLE_PAGE_V1)),
                ),
            ),
        ),
    )


def _shortlink_scenario() -> Scenario:
    return Scenario(
        name="shortlink",
        servers=(
            ServerSpec(
                host_alias="benign.local",
                routes=(
                    RouteRule(
                        path="/jump2mal",
                        action=Redirect(302, "http://malicious.local/mal"),
                    ),
                    RouteRule(path="/index", action=ServeBody(BENIGN_PAGE)),
                ),
            ),
            ServerSpec(
                host_alias="malicious.local",
                routes=(RouteRule(path="/mal", action=ServeBody(MALICIOUS_PAGE)),),
            ),
        ),
    )


def _cloaking_scenario(crawler_token: str = DEFAULT_CRAWLER_TOKEN) -> Scenario:
    return Scenario(
        name="cloaking",
        servers=(
            ServerSpec(
                host_alias="domain.local",
                routes=(
                    RouteRule(
                        path="/",
                        ua_contains=crawler_token,
                        action=ServeBody(CLOAK_BENIGN_PAGE),
                    ),
                    RouteRule(
                        path="/",
                        action=Redirect(302, "http://malicious.local/payload"),
                    ),
                ),
            ),
            ServerSpec(
                host_alias="malicious.local",
                routes=(
                    RouteRule(path="/payload", action=ServeBody(MALICIOUS_PAGE)),
                ),
            ),
        ),
    )


def _mismatch_scenario() -> Scenario:
    return Scenario(
        name="mismatch",
        servers=(
            ServerSpec(
                host_alias="mismatch.local",
                routes=(RouteRule(path="/", action=ServeBody(MISMATCH_PAGE)),),
            ),
        ),
    )


BUILTIN_SCENARIOS = {
    "benign": _benign_scenario,
    "shortlink": _shortlink_scenario,
    "cloaking": _cloaking_scenario,
    "mismatch": _mismatch_scenario,
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise InvalidScenario(f"unknown builtin scenario: {name}") from None


# --------------------------------------------------------------------------
# Scenario file schema
# --------------------------------------------------------------------------


def _action_from_dict(data: dict) -> ServeBody | Redirect | MutableBody:
    kind = data.get("type")
    if kind == "serve":
        return ServeBody(
            body=data["body"].encode("utf-8"),
            content_type=data.get("content_type", "text/html; charset=utf-8"),
        )
    if kind == "redirect":
        return Redirect(status=int(data["status"]), location=data["location"])
    if kind == "mutable":
        return MutableBody(
            initial=data["body"].encode("utf-8"),
            content_type=data.get("content_type", "text/html; charset=utf-8"),
        )
    raise InvalidScenario(f"unknown action type: {kind!r}")


def scenario_from_dict(data: dict) -> Scenario:
    try:
        servers = tuple(
            ServerSpec(
                host_alias=s["host_alias"],
                routes=tuple(
                    RouteRule(
                        path=r["path"],
                        ua_contains=r.get("ua_contains"),
                        action=_action_from_dict(r["action"]),
                    )
                    for r in s["routes"]
                ),
            )
            for s in data["servers"]
        )
        scenario = Scenario(name=data["name"], servers=servers)
    except (KeyError, TypeError) as exc:
        raise InvalidScenario(f"malformed scenario data: {exc}") from exc
    validate_scenario(scenario)
    return scenario
