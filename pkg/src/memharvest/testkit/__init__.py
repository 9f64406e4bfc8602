"""Deterministic local stand-ins for web-archive behavior.

serve() runs a scripted HTTP replay server: each route plays its responses
in order (the last one repeats), responses can be gated on a cookie, and a
global rate-trip rule can answer 429/503 when clients exceed a request rate.
The server keeps a timestamped request log for politeness assertions.

The fixture corpus (base pages, archive-wrapped variants, pathological
mementos, and golden extraction texts) ships as committed files under
corpus/; build_corpus() materializes a copy for external use.
"""
from __future__ import annotations

import json
import shutil
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import wrappers
from .wrappers import ARCHIVED_CONTENT_PREFIX  # noqa: F401 (re-export)

CORPUS_DIR = Path(__file__).parent / "corpus"


@dataclass(frozen=True)
class ScriptedResponse:
    """One canned response; require_cookie gates it on a request cookie name."""

    status: int = 200
    headers: tuple[tuple[str, str], ...] = ()
    body: bytes = b""
    body_file: str | None = None
    delay_ms: int = 0
    require_cookie: str | None = None
    when_missing: "ScriptedResponse | None" = None

    def resolve_body(self, base_dir: Path | None) -> bytes:
        if self.body_file is not None:
            path = Path(self.body_file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return path.read_bytes()
        return self.body


@dataclass(frozen=True)
class Route:
    path: str
    responses: tuple[ScriptedResponse, ...]


@dataclass(frozen=True)
class RateTrip:
    """Answer `status` when more than per_second requests land in one second."""

    per_second: float
    status: int = 429


@dataclass(frozen=True)
class Scenario:
    routes: tuple[Route, ...]
    rate_trip: RateTrip | None = None
    base_dir: Path | None = None

    def route_for(self, path: str) -> Route | None:
        for route in self.routes:
            if route.path == path:
                return route
        return None


@dataclass(frozen=True)
class RequestRecord:
    time: float  # monotonic seconds
    method: str
    path: str
    cookie: str
    user_agent: str
    status: int
    tripped: bool


def scenario(routes: dict[str, list[ScriptedResponse]], rate_trip: RateTrip | None = None) -> Scenario:
    """Convenience constructor from a {path: [responses]} mapping."""
    return Scenario(
        routes=tuple(Route(path, tuple(resp)) for path, resp in routes.items()),
        rate_trip=rate_trip,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario JSON file; body_file entries are relative to it."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    routes = []
    for robj in data["routes"]:
        responses = tuple(
            ScriptedResponse(
                status=resp.get("status", 200),
                headers=tuple((k, v) for k, v in resp.get("headers", [])),
                body_file=resp.get("body_file"),
                delay_ms=resp.get("delay_ms", 0),
            )
            for resp in robj["responses"]
        )
        routes.append(Route(robj["path"], responses))
    trip = data.get("rate_trip")
    rate_trip = RateTrip(per_second=trip["per_second"], status=trip.get("status", 429)) if trip else None
    return Scenario(routes=tuple(routes), rate_trip=rate_trip, base_dir=path.parent)


class _ScenarioState:
    def __init__(self, scn: Scenario):
        self.scenario = scn
        self.lock = threading.Lock()
        self.cursors: dict[str, int] = {}
        self.log: list[RequestRecord] = []
        self.arrivals: list[float] = []

    def next_response(self, path: str) -> ScriptedResponse | None:
        route = self.scenario.route_for(path)
        if route is None or not route.responses:
            return None
        with self.lock:
            i = self.cursors.get(path, 0)
            self.cursors[path] = i + 1
        return route.responses[min(i, len(route.responses) - 1)]

    def tripped(self, now: float) -> bool:
        trip = self.scenario.rate_trip
        if trip is None:
            return False
        with self.lock:
            self.arrivals.append(now)
            recent = [t for t in self.arrivals if now - t < 1.0]
            return len(recent) > trip.per_second

    def record(self, rec: RequestRecord) -> None:
        with self.lock:
            self.log.append(rec)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    state: _ScenarioState  # set on the subclass built in serve()

    def do_GET(self):  # noqa: N802 (http.server API)
        state = self.state
        now = time.monotonic()
        cookie = self.headers.get("Cookie", "")
        agent = self.headers.get("User-Agent", "")

        def record(status: int, tripped: bool = False) -> None:
            state.record(RequestRecord(now, "GET", self.path, cookie, agent, status, tripped))

        if state.tripped(now):
            status = state.scenario.rate_trip.status
            self._reply(status, (), b"rate limit tripped\n")
            record(status, tripped=True)
            return
        response = state.next_response(self.path)
        if response is None:
            self._reply(404, (("Content-Type", "text/plain"),), b"no route\n")
            record(404)
            return
        if response.require_cookie and not _has_cookie(cookie, response.require_cookie):
            fallback = response.when_missing or ScriptedResponse(
                status=409, body=b"missing session cookie\n"
            )
            self._reply(fallback.status, fallback.headers, fallback.resolve_body(state.scenario.base_dir))
            record(fallback.status)
            return
        if response.delay_ms:
            time.sleep(response.delay_ms / 1000.0)
        self._reply(response.status, response.headers, response.resolve_body(state.scenario.base_dir))
        record(response.status)

    def _reply(self, status: int, headers: tuple[tuple[str, str], ...], body: bytes):
        self.send_response_only(status)
        names = {k.lower() for k, _ in headers}
        for key, value in headers:
            self.send_header(key, value)
        if "content-length" not in names:
            self.send_header("Content-Length", str(len(body)))
        self.send_header("Connection", "close")
        self.end_headers()
        if body:
            self.wfile.write(body)

    def log_message(self, *args):  # quiet
        pass


def _has_cookie(cookie_header: str, name: str) -> bool:
    for part in cookie_header.split(";"):
        if part.strip().split("=", 1)[0] == name:
            return True
    return False


class ScenarioServer:
    """Handle for a running scripted server; use as a context manager."""

    def __init__(self, scn: Scenario, host: str = "127.0.0.1", port: int = 0):
        self._state = _ScenarioState(scn)
        handler = type("Handler", (_Handler,), {"state": self._state})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True
        )
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def base_url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return self.base_url + path

    def log(self) -> list[RequestRecord]:
        with self._state.lock:
            return list(self._state.log)

    def close(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "ScenarioServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve(scn: Scenario, host: str = "127.0.0.1", port: int = 0) -> ScenarioServer:
    """Start a scripted server on an ephemeral port and return its handle.

    Raises OSError when the address cannot be bound.
    """
    return ScenarioServer(scn, host=host, port=port)


# --- fixture corpus -----------------------------------------------------------


@dataclass(frozen=True)
class WrappedFixture:
    base: str
    archive: str
    file: str
    uri: str


@dataclass(frozen=True)
class FixtureCorpus:
    """View over a materialized corpus directory."""

    root: Path
    manifest: dict = field(repr=False)

    @property
    def base_names(self) -> list[str]:
        return sorted(self.manifest["bases"])

    def base_html(self, name: str) -> bytes:
        return (self.root / self.manifest["bases"][name]["file"]).read_bytes()

    def expected_text(self, name: str) -> str:
        return (self.root / self.manifest["bases"][name]["expected_text"]).read_text(
            encoding="utf-8"
        )

    @property
    def wrapped(self) -> list[WrappedFixture]:
        return [WrappedFixture(**w) for w in self.manifest["wrapped"]]

    def wrapped_bytes(self, base: str, archive: str) -> bytes:
        for w in self.wrapped:
            if w.base == base and w.archive == archive:
                return (self.root / w.file).read_bytes()
        raise KeyError(f"no wrapped fixture {base}/{archive}")

    def wrapped_uri(self, base: str, archive: str) -> str:
        for w in self.wrapped:
            if w.base == base and w.archive == archive:
                return w.uri
        raise KeyError(f"no wrapped fixture {base}/{archive}")

    @property
    def pathological_names(self) -> list[str]:
        return sorted(self.manifest["pathological"])

    def pathological(self, name: str) -> bytes:
        return (self.root / self.manifest["pathological"][name]["file"]).read_bytes()

    def pathological_info(self, name: str) -> dict:
        return self.manifest["pathological"][name]


def packaged_corpus() -> FixtureCorpus:
    """The corpus committed inside the installed package."""
    manifest = json.loads((CORPUS_DIR / "manifest.json").read_text(encoding="utf-8"))
    return FixtureCorpus(root=CORPUS_DIR, manifest=manifest)


def build_corpus(output: str | Path) -> FixtureCorpus:
    """Materialize the fixture corpus into a directory and return its view."""
    output = Path(output)
    output.mkdir(parents=True, exist_ok=True)
    for item in CORPUS_DIR.iterdir():
        dest = output / item.name
        if item.is_dir():
            shutil.copytree(item, dest, dirs_exist_ok=True)
        else:
            shutil.copy2(item, dest)
    manifest = json.loads((output / "manifest.json").read_text(encoding="utf-8"))
    return FixtureCorpus(root=output, manifest=manifest)
