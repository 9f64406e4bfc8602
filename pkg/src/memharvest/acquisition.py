"""Memento acquisition: dereference a URI to its final content.

Archives do not always answer with plain HTTP semantics.  resolve() follows,
in priority order per response: real 3xx redirects, archive-generated pages
that simulate a redirect in JavaScript, meta refresh directives, and
framesets whose content lives in one named frame (fetched with the session
cookies the frameset response set).  Requests are rate limited per host and
transient failures (timeout or 5xx) are retried with exponential backoff.
"""
from __future__ import annotations

import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple
from urllib.parse import urljoin

import requests

from .errors import (
    FrameAmbiguousError,
    InvalidUriError,
    NetworkError,
    RedirectLimitError,
    RedirectLoopError,
    TooManyRetries,
)
from .rules import RuleSet, builtin_rules, match_archive, uri_host

USER_AGENT = "memharvest/0.1"

# Marker and target-extraction regex for Wayback-style JavaScript redirect
# pages.  The testkit fixture for these pages is generated from the same
# marker so the two cannot drift apart.
JS_REDIRECT_MARKER = "Got an HTTP 302 response at crawl time"
DEFAULT_JS_REDIRECT_PATTERNS: tuple[str, ...] = (
    r'Got an HTTP 3\d\d response at crawl time.{0,2000}?<p class="impatient">\s*<a href="([^"]+)"',
)


@dataclass(frozen=True)
class FetchPolicy:
    """Knobs for politeness, persistence and redirect handling."""

    max_redirects: int = 10
    per_host_rate: float = 1.0  # requests per second, fractional allowed
    retry_attempts: int = 3  # retries after the first attempt
    retry_backoff_base: float = 2.0  # seconds; doubles per retry
    request_timeout: float = 60.0
    js_redirect_patterns: tuple[str, ...] = DEFAULT_JS_REDIRECT_PATTERNS
    user_agent: str = USER_AGENT

    def __post_init__(self):
        if self.max_redirects < 1:
            raise ValueError("max_redirects must be >= 1")
        if self.per_host_rate <= 0:
            raise ValueError("per_host_rate must be > 0")
        if self.retry_attempts < 0:
            raise ValueError("retry_attempts must be >= 0")


@dataclass(frozen=True)
class RedirectStep:
    """One hop of a redirect chain, with the mechanism that caused it."""

    kind: str  # "http" | "js-page" | "meta-refresh" | "frame"
    from_uri: str
    to_uri: str
    status: int | None = None
    delay: float | None = None

    def __post_init__(self):
        if self.kind not in ("http", "js-page", "meta-refresh", "frame"):
            raise ValueError(f"unknown redirect kind {self.kind!r}")
        if self.kind == "http" and not (self.status and 300 <= self.status < 400):
            raise ValueError("http redirect steps need a 3xx status")


@dataclass(frozen=True)
class FetchOutcome:
    """Final payload of a resolution plus the full chain that led to it."""

    request_uri: str
    final_uri: str
    chain: tuple[RedirectStep, ...]
    status: int
    headers: tuple[tuple[str, str], ...]
    body: bytes
    fetched_at: datetime
    attempts: int

    def header(self, name: str) -> str | None:
        """First header value matching name, case-insensitively."""
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None


class RawResponse(NamedTuple):
    """A single response as (status, headers, body), plus the attempt count."""

    status: int
    headers: tuple[tuple[str, str], ...]
    body: bytes
    attempts: int


class HostRateGate:
    """Shared per-host request spacing; safe for concurrent workers.

    Start times for one host are spaced at least min_interval apart.  One
    gate instance is shared by every resolution in the process, so the
    observed per-host rate holds across concurrent workers.
    """

    def __init__(self, clock=time.monotonic, sleep=time.sleep):
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_free: dict[str, float] = {}

    def acquire(self, host: str, min_interval: float) -> None:
        with self._lock:
            now = self._clock()
            start = max(now, self._next_free.get(host, now))
            self._next_free[host] = start + min_interval
        if start > now:
            self._sleep(start - now)


DEFAULT_GATE = HostRateGate()


def fetch_once(
    uri: str,
    policy: FetchPolicy | None = None,
    session: requests.Session | None = None,
    gate: HostRateGate | None = None,
) -> RawResponse:
    """One rate-limited GET with retries; never follows redirects.

    Set-Cookie headers are recorded into the session.  Timeouts and 5xx are
    retried up to policy.retry_attempts times with exponential backoff, then
    raise TooManyRetries; connection failures raise NetworkError at once.
    """
    policy = policy or FetchPolicy()
    session = session if session is not None else requests.Session()
    gate = gate or DEFAULT_GATE
    host = uri_host(uri)
    interval = 1.0 / policy.per_host_rate
    last_failure = ""
    for attempt in range(1, policy.retry_attempts + 2):
        if attempt > 1:
            time.sleep(policy.retry_backoff_base * 2 ** (attempt - 2))
        gate.acquire(host, interval)
        try:
            resp = session.get(
                uri,
                allow_redirects=False,
                timeout=policy.request_timeout,
                headers={"User-Agent": policy.user_agent},
            )
        except requests.Timeout:
            last_failure = "timeout"
            continue
        except requests.RequestException as exc:
            raise NetworkError(f"{uri}: {exc}") from exc
        if 500 <= resp.status_code < 600:
            last_failure = f"HTTP {resp.status_code}"
            resp.close()
            continue
        return RawResponse(resp.status_code, _header_pairs(resp), resp.content, attempt)
    raise TooManyRetries(uri, policy.retry_attempts + 1, last_failure)


def _header_pairs(resp: requests.Response) -> tuple[tuple[str, str], ...]:
    # urllib3's header dict preserves duplicate entries (e.g. Set-Cookie)
    return tuple((k, v) for k, v in resp.raw.headers.items())


# --- content-level redirect detection --------------------------------------

_COMMENT_RE = re.compile(rb"<!--.*?-->", re.S)
_NOSCRIPT_RE = re.compile(rb"<noscript\b[^>]*>.*?</noscript\s*>", re.S | re.I)
_META_TAG_RE = re.compile(rb"<meta\b[^>]*>", re.I)
_FRAMESET_RE = re.compile(rb"<frameset[\s>]", re.I)
_FRAME_RE = re.compile(rb"<frame\b[^>]*>", re.I)
_ATTR_RE = re.compile(rb"""([a-zA-Z][a-zA-Z0-9_:-]*)\s*=\s*("[^"]*"|'[^']*'|[^\s>]+)""")


def _tag_attrs(tag: bytes) -> dict[str, str]:
    attrs: dict[str, str] = {}
    for name, value in _ATTR_RE.findall(tag):
        if value[:1] in (b'"', b"'"):
            value = value[1:-1]
        attrs.setdefault(name.decode("ascii").lower(), value.decode("latin-1"))
    return attrs


def detect_js_redirect(
    body: bytes, base_uri: str, patterns: tuple[str, ...] = DEFAULT_JS_REDIRECT_PATTERNS
) -> str | None:
    """Target URI of an archive JavaScript-redirect page, or None.

    Patterns are ordered regexes applied to the raw bytes (ASCII matching);
    group 1 of the first match is the target, absolutized against base_uri.
    """
    for pattern in patterns:
        match = re.search(pattern.encode("ascii"), body, re.S | re.I)
        if match:
            target = match.group(1).decode("latin-1").strip()
            if target:
                return urljoin(base_uri, target)
    return None


def find_meta_refresh(body: bytes) -> str | None:
    """Raw content attribute of the first meta http-equiv=refresh, or None."""
    stripped = _COMMENT_RE.sub(b"", body)
    for tag in _META_TAG_RE.findall(stripped):
        attrs = _tag_attrs(tag)
        if attrs.get("http-equiv", "").strip().lower() == "refresh":
            return attrs.get("content", "")
    return None


def parse_refresh_content(content: str) -> tuple[float, str | None] | None:
    """Parse a refresh content attribute into (delay, target-or-None).

    Recognizes "N" (self reload) and "N; url=U" with case/quoting/separator
    variants.  Returns None when the attribute cannot be parsed.
    """
    text = content.strip()
    if not text:
        return None
    match = re.match(r"^(\d+(?:\.\d+)?)\s*(?:[;,]\s*(.*))?$", text, re.S)
    if not match:
        return None
    delay = float(match.group(1))
    rest = (match.group(2) or "").strip()
    if not rest:
        return delay, None
    url_match = re.match(r"""^url\s*=\s*(['"]?)(.*?)\1\s*$""", rest, re.I | re.S)
    if not url_match:
        return None
    target = url_match.group(2).strip()
    return delay, (target or None)


def detect_meta_refresh(body: bytes, base_uri: str) -> tuple[float, str | None] | None:
    """(delay, absolutized target) for a meta refresh, target None for self-reload."""
    content = find_meta_refresh(body)
    if content is None:
        return None
    parsed = parse_refresh_content(content)
    if parsed is None:
        return None
    delay, target = parsed
    return delay, (urljoin(base_uri, target) if target else None)


def detect_frameset(body: bytes) -> list[tuple[str, str]] | None:
    """Frames of a top-level frameset as (name, src) in document order, or None."""
    stripped = _NOSCRIPT_RE.sub(b"", _COMMENT_RE.sub(b"", body))
    if not _FRAMESET_RE.search(stripped):
        return None
    frames = []
    for tag in _FRAME_RE.findall(stripped):
        attrs = _tag_attrs(tag)
        frames.append((attrs.get("name", ""), attrs.get("src", "")))
    return frames


# --- the resolver -----------------------------------------------------------


def _next_step(
    current: str, resp: RawResponse, policy: FetchPolicy, ruleset: RuleSet
) -> RedirectStep | None:
    if 300 <= resp.status < 400:
        location = next((v for k, v in resp.headers if k.lower() == "location"), None)
        if location:
            return RedirectStep("http", current, urljoin(current, location), status=resp.status)
        return None
    if not 200 <= resp.status < 300:
        return None
    js_target = detect_js_redirect(resp.body, current, policy.js_redirect_patterns)
    if js_target:
        return RedirectStep("js-page", current, js_target, status=resp.status)
    refresh = detect_meta_refresh(resp.body, current)
    if refresh is not None:
        _, target = refresh
        if target is not None and target != current:
            return RedirectStep("meta-refresh", current, target, status=resp.status, delay=refresh[0])
    frames = detect_frameset(resp.body)
    if frames is not None:
        src = _select_frame(frames, match_archive(current, ruleset).frame_select)
        if src is not None:
            return RedirectStep("frame", current, urljoin(current, src), status=resp.status)
    return None


def _select_frame(frames: list[tuple[str, str]], frame_select: str | None) -> str | None:
    with_src = [(name, src) for name, src in frames if src]
    if frame_select:
        for name, src in with_src:
            if name == frame_select:
                return src
    if not with_src:
        return None
    if len(with_src) == 1:
        return with_src[0][1]
    raise FrameAmbiguousError(
        f"frameset has {len(with_src)} frames and none is selected by a rule"
    )


def resolve(
    uri: str,
    policy: FetchPolicy | None = None,
    ruleset: RuleSet | None = None,
    gate: HostRateGate | None = None,
) -> FetchOutcome:
    """Dereference a memento URI to its final content.

    Each response is inspected for, in priority order, an HTTP 3xx Location,
    a JavaScript-redirect page, a meta refresh with a non-self target, and a
    frameset; the chain records every hop taken.  The cookie store is fresh
    per call and carried across hops, so cookie-gated frames work.
    """
    policy = policy or FetchPolicy()
    ruleset = ruleset or builtin_rules()
    session = requests.Session()
    chain: list[RedirectStep] = []
    seen: set[tuple[str, str]] = set()
    attempts = 0
    current = uri
    while True:
        resp = fetch_once(current, policy, session, gate=gate)
        attempts += resp.attempts
        step = _next_step(current, resp, policy, ruleset)
        if step is None:
            return FetchOutcome(
                request_uri=uri,
                final_uri=current,
                chain=tuple(chain),
                status=resp.status,
                headers=resp.headers,
                body=resp.body,
                fetched_at=datetime.now(timezone.utc),
                attempts=attempts,
            )
        if len(chain) >= policy.max_redirects:
            raise RedirectLimitError(
                f"{uri}: redirect chain exceeds max_redirects={policy.max_redirects}"
            )
        key = (step.kind, step.to_uri)
        if key in seen:
            raise RedirectLoopError(f"{uri}: {step.kind} redirect to {step.to_uri} repeats")
        seen.add(key)
        chain.append(step)
        current = step.to_uri
