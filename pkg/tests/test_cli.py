"""CLI: URI lists, pipeline runs with resume, reporting, exit codes."""
from __future__ import annotations

import json

import pytest

from memharvest import InvalidUriError, Store, key_for_uri
from memharvest.cli import read_uri_list, run_cli
from memharvest.testkit import ScriptedResponse, scenario, serve

from conftest import ok_html


def write_uris(tmp_path, uris):
    path = tmp_path / "uris.txt"
    path.write_text("".join(u + "\n" for u in uris), encoding="utf-8")
    return path


def four_uri_scenario(corpus):
    """Three healthy pages plus one scripted permanent failure."""
    return scenario(
        {
            "/one": [ok_html(corpus.base_html("base_quarry"))],
            "/two": [ok_html(corpus.base_html("base_chips"))],
            "/three": [ok_html(corpus.base_html("base_ferry"))],
            "/broken": [ScriptedResponse(status=503, body=b"always down")],
        }
    )


def pipeline_args(input_path, store_root, **extra):
    args = [
        "pipeline",
        "--input", str(input_path),
        "--store", str(store_root),
        "--rate", "500",
        "--retries", "0",
        "--timeout", "5",
    ]
    for flag, value in extra.items():
        args.append(f"--{flag.replace('_', '-')}")
        if value is not True:
            args.append(str(value))
    return args


class TestReadUriList:
    def test_skips_blanks_and_comments(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("http://a/\n#skip me\n\n  http://b/  \n")
        assert read_uri_list(path) == ["http://a/", "http://b/"]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("")
        assert read_uri_list(path) == []

    def test_invalid_line_reports_number(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("http://a/\nnot a uri\n")
        with pytest.raises(InvalidUriError) as info:
            read_uri_list(path)
        assert info.value.line == 2

    def test_duplicates_and_order_preserved(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("http://b/\nhttp://a/\nhttp://b/\n")
        assert read_uri_list(path) == ["http://b/", "http://a/", "http://b/"]

    def test_embedded_whitespace_rejected(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("http://a/with\ttab\n")
        with pytest.raises(InvalidUriError) as info:
            read_uri_list(path)
        assert info.value.line == 1


class TestPipeline:
    def test_run_covers_every_uri(self, tmp_path, corpus, capsys):
        with serve(four_uri_scenario(corpus)) as srv:
            uris = [srv.url(p) for p in ("/one", "/two", "/three", "/broken")]
            input_path = write_uris(tmp_path, uris)
            code = run_cli(pipeline_args(input_path, tmp_path / "store"))
        assert code == 0
        manifest = Store(tmp_path / "store").list()
        assert {r.request_uri for r in manifest.records} == set(uris)
        classes = {r.request_uri: r.outcome_class for r in manifest.records}
        assert classes[srv.url("/broken")] == "network-error"
        assert all(classes[srv.url(p)] == "ok" for p in ("/one", "/two", "/three"))

    def test_stored_text_matches_golden(self, tmp_path, corpus):
        with serve(four_uri_scenario(corpus)) as srv:
            uri = srv.url("/one")
            input_path = write_uris(tmp_path, [uri])
            assert run_cli(pipeline_args(input_path, tmp_path / "store")) == 0
        entry = Store(tmp_path / "store").get(key_for_uri(uri))
        assert entry.text == corpus.expected_text("base_quarry")
        assert entry.meta.archive_id == "default"

    def test_resume_skips_ok_entries(self, tmp_path, corpus):
        store_root = tmp_path / "store"
        with serve(four_uri_scenario(corpus)) as srv:
            uris = [srv.url(p) for p in ("/one", "/two", "/three", "/broken")]
            input_path = write_uris(tmp_path, uris)
            assert run_cli(pipeline_args(input_path, store_root)) == 0
            first_run_requests = len(srv.log())
            assert run_cli(pipeline_args(input_path, store_root)) == 0
            log = srv.log()
        # second run refetches only the broken URI
        refetched_paths = {r.path for r in log[first_run_requests:]}
        assert refetched_paths == {"/broken"}

    def test_resume_refetches_when_entry_missing(self, tmp_path, corpus):
        import shutil

        store_root = tmp_path / "store"
        with serve(four_uri_scenario(corpus)) as srv:
            uri = srv.url("/one")
            input_path = write_uris(tmp_path, [uri])
            assert run_cli(pipeline_args(input_path, store_root)) == 0
            key = key_for_uri(uri)
            shutil.rmtree(store_root / key[:2] / key)
            assert run_cli(pipeline_args(input_path, store_root)) == 0
            assert len(srv.log()) == 2  # manifest said ok, but the entry was gone
        assert Store(store_root).get(key) is not None

    def test_worker_counts_equivalent(self, tmp_path, corpus):
        results = {}
        for workers in (1, 4):
            store_root = tmp_path / f"store-w{workers}"
            with serve(four_uri_scenario(corpus)) as srv:
                uris = [srv.url(p) for p in ("/one", "/two", "/three", "/broken")]
                input_path = write_uris(tmp_path, uris)
                assert run_cli(pipeline_args(input_path, store_root, workers=workers)) == 0
            store = Store(store_root)
            manifest = store.list()
            results[workers] = {
                "classes": {r.request_uri.rsplit("/", 1)[-1]: r.outcome_class for r in manifest.records},
                "texts": {
                    key: store.get(key).text for key in store.keys()
                },
            }
        assert results[1]["classes"] == results[4]["classes"]
        assert sorted(results[1]["texts"].values(), key=str) == sorted(
            results[4]["texts"].values(), key=str
        )

    def test_pathological_classes_recorded(self, tmp_path, corpus):
        routes = {
            "/corrupt": [ok_html(corpus.pathological("noscript_unclosed"))],
            "/pdf": [
                ScriptedResponse(
                    status=200, headers=(("Content-Type", "application/pdf"),), body=b"%PDF-1.4"
                )
            ],
            "/undecodable": [ok_html(corpus.pathological("undecodable"))],
        }
        with serve(scenario(routes)) as srv:
            uris = [srv.url(p) for p in ("/corrupt", "/pdf", "/undecodable")]
            input_path = write_uris(tmp_path, uris)
            code = run_cli(
                pipeline_args(input_path, tmp_path / "store", strict_decode=True)
            )
        assert code == 0
        classes = {
            r.request_uri.rsplit("/", 1)[-1]: r.outcome_class
            for r in Store(tmp_path / "store").list().records
        }
        assert classes == {
            "corrupt": "noscript-corruption",
            "pdf": "unsupported-media-type",
            "undecodable": "undecodable",
        }
        # corrupted page stored its raw bytes but no text
        entry = Store(tmp_path / "store").get(key_for_uri(uris[0]))
        assert entry.text is None
        assert entry.raw == corpus.pathological("noscript_unclosed")

    def test_missing_input_file_exits_1(self, tmp_path, capsys):
        code = run_cli(pipeline_args(tmp_path / "absent.txt", tmp_path / "store"))
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_custom_rules_flag(self, tmp_path, corpus):
        rules_doc = {
            "rules": [
                {
                    "archive_id": "local-banner",
                    "hosts": ["127.0.0.1"],
                    "strip": [
                        {"when": {"kind": "always"}, "tag": "h1", "attr": "id", "value": "ad"}
                    ],
                }
            ]
        }
        rules_path = tmp_path / "rules.json"
        rules_path.write_text(json.dumps(rules_doc))
        body = (
            b"<html><head><title>X</title></head>\n<body>\n"
            b'<h1 id="ad">AD</h1>\n<p>kept</p>\n</body></html>'
        )
        with serve(scenario({"/p": [ok_html(body)]})) as srv:
            input_path = write_uris(tmp_path, [srv.url("/p")])
            code = run_cli(
                pipeline_args(input_path, tmp_path / "store", rules=rules_path)
            )
            assert code == 0
            entry = Store(tmp_path / "store").get(key_for_uri(srv.url("/p")))
        assert entry.text == "X\nkept"
        assert entry.meta.archive_id == "local-banner"

    def test_rules_env_var(self, tmp_path, corpus, monkeypatch):
        rules_path = tmp_path / "env-rules.json"
        rules_path.write_text(
            '{"rules": [{"archive_id": "env-rule", "hosts": ["127.0.0.1"]}]}'
        )
        monkeypatch.setenv("MEMHARVEST_RULES", str(rules_path))
        with serve(scenario({"/p": [ok_html(b"<p>x</p>")]})) as srv:
            input_path = write_uris(tmp_path, [srv.url("/p")])
            assert run_cli(pipeline_args(input_path, tmp_path / "store")) == 0
            entry = Store(tmp_path / "store").get(key_for_uri(srv.url("/p")))
        assert entry.meta.archive_id == "env-rule"


class TestReport:
    def run_four(self, tmp_path, corpus):
        with serve(four_uri_scenario(corpus)) as srv:
            uris = [srv.url(p) for p in ("/one", "/two", "/three", "/broken")]
            input_path = write_uris(tmp_path, uris)
            assert run_cli(pipeline_args(input_path, tmp_path / "store")) == 0

    def test_quarter_problematic(self, tmp_path, corpus, capsys):
        self.run_four(tmp_path, corpus)
        assert run_cli(["report", "--store", str(tmp_path / "store")]) == 0
        out = capsys.readouterr().out
        assert "problematic: 1/4 (25.0%)" in out

    def test_json_sibling_written(self, tmp_path, corpus):
        self.run_four(tmp_path, corpus)
        report_path = tmp_path / "report.txt"
        assert run_cli(
            ["report", "--store", str(tmp_path / "store"), "--report", str(report_path)]
        ) == 0
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["total"] == 4
        assert payload["classes"]["ok"] == 3
        assert payload["classes"]["network-error"] == 1
        assert "problematic: 1/4 (25.0%)" in report_path.read_text()

    def test_report_missing_store_exits_1(self, tmp_path):
        assert run_cli(["report", "--store", str(tmp_path / "nope")]) == 1

    def test_pipeline_report_flag_writes_files(self, tmp_path, corpus):
        with serve(four_uri_scenario(corpus)) as srv:
            uris = [srv.url(p) for p in ("/one", "/broken")]
            input_path = write_uris(tmp_path, uris)
            code = run_cli(
                pipeline_args(input_path, tmp_path / "store", report=tmp_path / "run.txt")
            )
        assert code == 0
        assert "problematic: 1/2 (50.0%)" in (tmp_path / "run.txt").read_text()
        payload = json.loads((tmp_path / "run.json").read_text())
        assert payload == {
            "total": 2,
            "classes": {
                "ok": 1,
                "redirect-limit": 0,
                "network-error": 1,
                "noscript-corruption": 0,
                "undecodable": 0,
                "unsupported-media-type": 0,
            },
        }


class TestFetchAndExtractCommands:
    def test_fetch_prints_chain(self, corpus, capsys):
        routes = {
            "/start": [ScriptedResponse(status=302, headers=(("Location", "/end"),))],
            "/end": [ok_html(b"payload")],
        }
        with serve(scenario(routes)) as srv:
            code = run_cli(["fetch", srv.url("/start"), "--rate", "500"])
        assert code == 0
        out = capsys.readouterr().out
        assert "http" in out
        assert "final: 200" in out

    def test_extract_uri_prints_text(self, corpus, capsys):
        with serve(scenario({"/p": [ok_html(corpus.base_html("base_quarry"))]})) as srv:
            code = run_cli(["extract", srv.url("/p"), "--rate", "500"])
        assert code == 0
        assert corpus.expected_text("base_quarry") in capsys.readouterr().out

    def test_extract_key_from_store(self, tmp_path, corpus, capsys):
        with serve(scenario({"/p": [ok_html(corpus.base_html("base_cafe"))]})) as srv:
            uri = srv.url("/p")
            input_path = write_uris(tmp_path, [uri])
            assert run_cli(pipeline_args(input_path, tmp_path / "store")) == 0
        capsys.readouterr()
        code = run_cli(
            ["extract", key_for_uri(uri), "--store", str(tmp_path / "store")]
        )
        assert code == 0
        assert corpus.expected_text("base_cafe") in capsys.readouterr().out

    def test_extract_key_without_store_is_error(self, capsys):
        assert run_cli(["extract", "a" * 64]) == 1
        assert "requires --store" in capsys.readouterr().err

    def test_extract_absent_key_is_error(self, tmp_path, capsys):
        (tmp_path / "store").mkdir()
        assert run_cli(["extract", "a" * 64, "--store", str(tmp_path / "store")]) == 1

    def test_fetch_network_failure_exits_1(self, capsys):
        assert run_cli(["fetch", "http://127.0.0.1:9/none", "--rate", "500"]) == 1
        assert "error" in capsys.readouterr().err

    def test_extract_non_2xx_is_error(self, capsys):
        with serve(scenario({"/gone": [ScriptedResponse(status=404, body=b"x")]})) as srv:
            code = run_cli(["extract", srv.url("/gone"), "--rate", "500"])
        assert code == 1
        assert "nothing to extract" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_flag_exits_2(self, capsys):
        assert run_cli(["pipeline", "--bogus"]) == 2

    def test_zero_workers_exits_2(self, tmp_path, capsys):
        path = tmp_path / "u.txt"
        path.write_text("http://a/\n")
        code = run_cli(
            ["pipeline", "--input", str(path), "--store", str(tmp_path / "s"), "--workers", "0"]
        )
        assert code == 2

    def test_missing_required_flag_exits_2(self, capsys):
        assert run_cli(["pipeline", "--input", "x"]) == 2

    def test_no_command_exits_2(self, capsys):
        assert run_cli([]) == 2

    def test_unknown_command_exits_2(self, capsys):
        assert run_cli(["frobnicate"]) == 2
