"""Testkit: scripted playback, rate tripping, scenario files, corpus integrity."""
from __future__ import annotations

import json
import time

import requests

from memharvest.testkit import (
    RateTrip,
    ScriptedResponse,
    load_scenario,
    packaged_corpus,
    scenario,
    serve,
)
from memharvest.testkit.regen import generate_into
from memharvest.textify import normalize_whitespace

from conftest import ok_html


def get(url: str, **kw) -> requests.Response:
    return requests.get(url, timeout=5, **kw)


class TestScenarioPlayback:
    def test_single_route_body(self):
        with serve(scenario({"/x": [ok_html(b"scripted body")]})) as srv:
            assert get(srv.url("/x")).content == b"scripted body"

    def test_responses_consumed_in_order_last_repeats(self):
        responses = [
            ScriptedResponse(status=503, body=b"one"),
            ScriptedResponse(status=503, body=b"two"),
            ok_html(b"three"),
        ]
        with serve(scenario({"/x": responses})) as srv:
            seen = [get(srv.url("/x")) for _ in range(5)]
        assert [r.status_code for r in seen] == [503, 503, 200, 200, 200]
        assert seen[-1].content == b"three"

    def test_unknown_route_404(self):
        with serve(scenario({"/x": [ok_html(b"x")]})) as srv:
            assert get(srv.url("/nope")).status_code == 404

    def test_request_log_records_order_and_status(self):
        with serve(scenario({"/x": [ScriptedResponse(status=503), ok_html(b"ok")]})) as srv:
            get(srv.url("/x"))
            get(srv.url("/x"))
            get(srv.url("/other"))
            log = srv.log()
        assert [(r.path, r.status) for r in log] == [("/x", 503), ("/x", 200), ("/other", 404)]
        assert log[0].time <= log[1].time <= log[2].time

    def test_cookie_gate(self):
        gated = ok_html(
            b"secret",
            require_cookie="sid",
            when_missing=ScriptedResponse(status=200, body=b"who are you"),
        )
        with serve(scenario({"/m": [gated]})) as srv:
            assert get(srv.url("/m")).content == b"who are you"
            assert get(srv.url("/m"), cookies={"sid": "1"}).content == b"secret"

    def test_response_delay(self):
        with serve(scenario({"/slow": [ScriptedResponse(body=b"z", delay_ms=80)]})) as srv:
            start = time.monotonic()
            get(srv.url("/slow"))
            assert time.monotonic() - start >= 0.08


class TestRateTrip:
    def test_fires_above_threshold(self):
        scn = scenario({"/x": [ok_html(b"ok")]}, rate_trip=RateTrip(per_second=3, status=429))
        with serve(scn) as srv:
            statuses = [get(srv.url("/x")).status_code for _ in range(6)]
        assert 429 in statuses
        assert any(r.tripped for r in srv.log())

    def test_silent_below_threshold(self):
        scn = scenario({"/x": [ok_html(b"ok")]}, rate_trip=RateTrip(per_second=3, status=429))
        with serve(scn) as srv:
            statuses = []
            for _ in range(4):
                statuses.append(get(srv.url("/x")).status_code)
                time.sleep(0.4)
        assert statuses == [200, 200, 200, 200]
        assert not any(r.tripped for r in srv.log())


class TestScenarioFile:
    def test_load_and_serve(self, tmp_path):
        (tmp_path / "hello.html").write_bytes(b"<p>from file</p>")
        doc = {
            "routes": [
                {
                    "path": "/hello",
                    "responses": [
                        {
                            "status": 200,
                            "headers": [["Content-Type", "text/html"]],
                            "body_file": "hello.html",
                            "delay_ms": 0,
                        }
                    ],
                }
            ],
            "rate_trip": {"per_second": 50, "status": 429},
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc))
        scn = load_scenario(path)
        assert scn.rate_trip.per_second == 50
        with serve(scn) as srv:
            resp = get(srv.url("/hello"))
        assert resp.content == b"<p>from file</p>"
        assert resp.headers["Content-Type"] == "text/html"

    def test_null_rate_trip(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text('{"routes": [], "rate_trip": null}')
        assert load_scenario(path).rate_trip is None


class TestCorpus:
    def test_committed_corpus_matches_builders(self, tmp_path):
        committed = packaged_corpus()
        regenerated_root = tmp_path / "corpus"
        for sub in ("bases", "expected", "pathological"):
            dest = regenerated_root / sub
            dest.mkdir(parents=True)
            for f in (committed.root / sub).iterdir():
                if sub == "pathological" and not f.name.startswith("noscript"):
                    continue  # derived files are regenerated below
                (dest / f.name).write_bytes(f.read_bytes())
        generate_into(regenerated_root)
        fresh = sorted(p.relative_to(regenerated_root) for p in regenerated_root.rglob("*") if p.is_file())
        committed_files = sorted(
            p.relative_to(committed.root) for p in committed.root.rglob("*") if p.is_file()
        )
        assert fresh == committed_files
        for rel in fresh:
            assert (regenerated_root / rel).read_bytes() == (committed.root / rel).read_bytes(), rel

    def test_wrapped_embeds_base_content(self, corpus):
        # the base's body interior must appear verbatim in each wrapped
        # variant (minification collapses whitespace for archive-is)
        for w in corpus.wrapped:
            base_html = corpus.base_html(w.base).decode("utf-8")
            interior = base_html.split("<body>", 1)[1].rsplit("</body>", 1)[0]
            wrapped = corpus.wrapped_bytes(w.base, w.archive).decode("utf-8")
            if w.archive == "archive-is":
                import re

                assert re.sub(r"\s+", " ", interior).strip() in wrapped
            else:
                assert interior in wrapped, (w.base, w.archive)

    def test_goldens_are_normalized_text(self, corpus):
        for name in corpus.base_names:
            golden = corpus.expected_text(name)
            assert golden == normalize_whitespace(golden)
            assert golden  # never empty

    def test_null_fixture_has_interleaved_null_tag(self, corpus):
        body = corpus.pathological("null_bytes")
        assert b"<\x00h\x00t\x00m\x00l\x00>" in body
        assert body.count(b"\x00") == 5

    def test_webcite_fixture_structure(self, corpus):
        body = corpus.pathological("webcite_frameset")
        assert b'<frameset rows="60,*" frameborder="0">' in body
        assert b'<frame src="./topframe.php" name="nav"' in body
        assert b'<frame src="./mainframe.php" name="main"' in body
        assert b'content="text/html; charset=utf-8"' in body

    def test_build_corpus_materializes_everything(self, tmp_path, corpus):
        out = tmp_path / "materialized"
        from memharvest.testkit import build_corpus

        built = build_corpus(out)
        assert built.base_names == corpus.base_names
        for w in corpus.wrapped:
            assert built.wrapped_bytes(w.base, w.archive) == corpus.wrapped_bytes(
                w.base, w.archive
            )
        for name in corpus.pathological_names:
            assert built.pathological(name) == corpus.pathological(name)
