"""Shared fixtures: fast fetch policies, canned outcomes, scenario builders."""
from __future__ import annotations

from datetime import datetime, timezone

import pytest

from memharvest import FetchOutcome, FetchPolicy, RuleSet, builtin_rules
from memharvest.rules import ArchiveRule
from memharvest.testkit import ScriptedResponse, packaged_corpus, scenario

HTML_UTF8 = "text/html; charset=utf-8"


def fast_policy(**kw) -> FetchPolicy:
    """Policy tuned for tests: effectively unthrottled, near-instant backoff."""
    defaults = dict(per_host_rate=500.0, retry_backoff_base=0.01, request_timeout=10.0)
    defaults.update(kw)
    return FetchPolicy(**defaults)


def html_outcome(
    body: bytes,
    uri: str = "http://example.com/page",
    content_type: str | None = HTML_UTF8,
    status: int = 200,
    extra_headers: tuple[tuple[str, str], ...] = (),
) -> FetchOutcome:
    headers = extra_headers
    if content_type is not None:
        headers = (("Content-Type", content_type),) + extra_headers
    return FetchOutcome(
        request_uri=uri,
        final_uri=uri,
        chain=(),
        status=status,
        headers=headers,
        body=body,
        fetched_at=datetime(2016, 1, 1, tzinfo=timezone.utc),
        attempts=1,
    )


def with_local_rule(base: RuleSet, **rule_kw) -> RuleSet:
    """Prepend a rule matching the testkit server host (127.0.0.1)."""
    rule = ArchiveRule(archive_id="local-test", host_patterns=("127.0.0.1",), **rule_kw)
    return RuleSet(rules=(rule,) + base.rules, fallback=base.fallback)


def ok_html(body: bytes, **kw) -> ScriptedResponse:
    return ScriptedResponse(status=200, headers=(("Content-Type", HTML_UTF8),), body=body, **kw)


@pytest.fixture(scope="session")
def corpus():
    return packaged_corpus()


@pytest.fixture()
def ruleset():
    return builtin_rules()


def webcite_scenario(corpus, snapshot_path: str = "/5rRjzl9dY"):
    """Frameset with a session cookie; the main frame pays out only with it."""
    return scenario(
        {
            snapshot_path: [
                ScriptedResponse(
                    status=200,
                    headers=(
                        ("Content-Type", HTML_UTF8),
                        ("Set-Cookie", "webcite_session=snap42; Path=/"),
                    ),
                    body=corpus.pathological("webcite_frameset"),
                )
            ],
            "/mainframe.php": [
                ok_html(
                    corpus.pathological("webcite_mainframe"),
                    require_cookie="webcite_session",
                    when_missing=ok_html(corpus.pathological("webcite_nosession")),
                )
            ],
            "/topframe.php": [ok_html(corpus.pathological("webcite_topframe"))],
        }
    )
