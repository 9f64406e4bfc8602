"""Command line interface: fetch, extract, batch pipeline, and reporting.

The pipeline fetches and extracts every URI in an input list into a store,
classifies each attempt (ok, redirect-limit, network-error,
noscript-corruption, undecodable, unsupported-media-type), and appends one
manifest line per attempt so an interrupted run can resume.  `report`
turns a store's manifest into outcome-class counts and percentages.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .acquisition import FetchOutcome, FetchPolicy, resolve
from .errors import (
    FrameAmbiguousError,
    InvalidUriError,
    MemharvestError,
    NetworkError,
    NoscriptCorruptionError,
    RedirectLimitError,
    RedirectLoopError,
    UndecodableError,
)
from .rules import RuleSet, builtin_rules, load_rules_file, match_archive, uri_host
from .store import (
    ManifestRecord,
    OUTCOME_CLASSES,
    Store,
    entry_from_outcome,
    key_for_uri,
)
from .textify import (
    NOSCRIPT_CORRUPTION,
    UNSUPPORTED_MEDIA_TYPE,
    Diagnostic,
    extract,
)

RULES_ENV_VAR = "MEMHARVEST_RULES"
_KEY_RE = re.compile(r"^[0-9a-f]{64}$")


@dataclass
class RunConfig:
    input_path: Path
    store_root: Path
    rules_path: Path | None = None
    rate: float | None = None
    retries: int | None = None
    max_redirects: int | None = None
    timeout: float | None = None
    user_agent: str | None = None
    workers: int = 1
    strict_decode: bool = False
    report_path: Path | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")

    def policy(self) -> FetchPolicy:
        defaults = FetchPolicy()
        return FetchPolicy(
            max_redirects=self.max_redirects or defaults.max_redirects,
            per_host_rate=self.rate or defaults.per_host_rate,
            retry_attempts=self.retries if self.retries is not None else defaults.retry_attempts,
            request_timeout=self.timeout or defaults.request_timeout,
            user_agent=self.user_agent or defaults.user_agent,
        )


def read_uri_list(path: str | Path) -> list[str]:
    """One URI per line; blank lines and # comments skipped, order preserved."""
    uris = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            # embedded whitespace parses "successfully" via urlsplit but is
            # never a valid URI and would corrupt the tab-separated manifest
            if any(ch.isspace() for ch in text):
                raise InvalidUriError(text, "contains whitespace", line=lineno)
            try:
                uri_host(text)
            except InvalidUriError as exc:
                raise InvalidUriError(text, str(exc), line=lineno) from None
            uris.append(text)
    return uris


def _load_ruleset(rules_path: Path | None) -> RuleSet:
    if rules_path is None:
        env = os.environ.get(RULES_ENV_VAR)
        rules_path = Path(env) if env else None
    if rules_path is None:
        return builtin_rules()
    return load_rules_file(rules_path)


def process_uri(
    uri: str,
    store: Store,
    ruleset: RuleSet,
    policy: FetchPolicy,
    strict_decode: bool = False,
) -> ManifestRecord:
    """Fetch, extract and persist one URI; returns its manifest record."""
    key = key_for_uri(uri)
    try:
        outcome = resolve(uri, policy, ruleset)
    except (RedirectLimitError, RedirectLoopError):
        return ManifestRecord(key, uri, 0, "redirect-limit")
    except (NetworkError, FrameAmbiguousError):
        return ManifestRecord(key, uri, 0, "network-error")

    archive_id = match_archive(outcome.final_uri, ruleset).archive_id
    if not 200 <= outcome.status < 300:
        # terminal non-2xx payload: acquisition did not produce a memento
        return ManifestRecord(key, uri, outcome.status, "network-error")

    try:
        result = extract(outcome, ruleset, strict_decode=strict_decode)
    except NoscriptCorruptionError as exc:
        diags = (Diagnostic(NOSCRIPT_CORRUPTION, detail=exc.detail),)
        store.put(entry_from_outcome(outcome, archive_id, text=None, diagnostics=diags))
        return ManifestRecord(key, uri, outcome.status, "noscript-corruption")
    except UndecodableError:
        store.put(entry_from_outcome(outcome, archive_id))
        return ManifestRecord(key, uri, outcome.status, "undecodable")

    store.put(
        entry_from_outcome(outcome, result.archive_id, text=result.text, diagnostics=result.diagnostics)
    )
    unsupported = any(d.code == UNSUPPORTED_MEDIA_TYPE for d in result.diagnostics)
    outcome_class = "unsupported-media-type" if unsupported else "ok"
    return ManifestRecord(key, uri, outcome.status, outcome_class)


def run_pipeline(config: RunConfig, out=sys.stdout) -> int:
    uris = read_uri_list(config.input_path)
    ruleset = _load_ruleset(config.rules_path)
    policy = config.policy()
    store = Store(config.store_root)
    store.root.mkdir(parents=True, exist_ok=True)

    previous = store.list().latest_by_key()
    writer = store.manifest_writer()
    done_lock = threading.Lock()
    counts = {"fetched": 0, "skipped": 0}

    def work(uri: str) -> None:
        key = key_for_uri(uri)
        prior = previous.get(key)
        if prior is not None and prior.outcome_class == "ok" and store.has(key):
            with done_lock:
                counts["skipped"] += 1
            return
        record = process_uri(uri, store, ruleset, policy, strict_decode=config.strict_decode)
        writer.append(record)
        with done_lock:
            counts["fetched"] += 1

    if config.workers == 1:
        for uri in uris:
            work(uri)
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(work, uris))

    print(
        f"pipeline done: {len(uris)} URIs ({counts['fetched']} attempted, "
        f"{counts['skipped']} already ok)",
        file=out,
    )
    if config.report_path is not None:
        write_report(store, config.report_path, out=out)
    return 0


def format_report(store: Store) -> tuple[str, dict]:
    manifest = store.list()
    counts = manifest.class_counts()
    total = sum(counts.values())
    problematic = total - counts.get("ok", 0)
    width = max(len(c) for c in OUTCOME_CLASSES)
    lines = [f"outcome classes over {total} attempted URIs"]
    for cls in OUTCOME_CLASSES:
        n = counts.get(cls, 0)
        pct = (100.0 * n / total) if total else 0.0
        lines.append(f"  {cls:<{width}}  {n:>6}  {pct:5.1f}%")
    pct_problem = (100.0 * problematic / total) if total else 0.0
    lines.append(f"problematic: {problematic}/{total} ({pct_problem:.1f}%)")
    table = "\n".join(lines) + "\n"
    payload = {"total": total, "classes": counts}
    return table, payload


def write_report(store: Store, path: Path, out=sys.stdout) -> None:
    """Write the plain-text table to path and the JSON payload to a sibling."""
    table, payload = format_report(store)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table, encoding="utf-8")
    json_path = path.with_suffix(".json")
    if json_path == path:
        json_path = path.with_name(path.name + ".json")
    json_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"report written to {path} and {json_path}", file=out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memharvest",
        description="Acquire mementos from web archives and extract comparable text.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_policy_flags(p):
        p.add_argument("--rate", type=float, help="per-host requests per second")
        p.add_argument("--retries", type=int, help="retries after a transient failure")
        p.add_argument("--max-redirects", type=int, help="redirect chain limit")
        p.add_argument("--timeout", type=float, help="request timeout in seconds")
        p.add_argument("--user-agent", help="User-Agent header value")

    def add_rules_flag(p):
        p.add_argument(
            "--rules",
            type=Path,
            help=f"rule file path (default: ${RULES_ENV_VAR} or builtins)",
        )

    p_fetch = sub.add_parser("fetch", help="resolve one URI and print its redirect chain")
    p_fetch.add_argument("uri")
    add_policy_flags(p_fetch)
    add_rules_flag(p_fetch)

    p_extract = sub.add_parser("extract", help="print normalized text and diagnostics")
    p_extract.add_argument("target", metavar="uri|key", help="a URI, or a store key with --store")
    p_extract.add_argument("--store", type=Path, help="store root for key lookups")
    p_extract.add_argument("--strict-decode", action="store_true")
    add_policy_flags(p_extract)
    add_rules_flag(p_extract)

    p_pipe = sub.add_parser("pipeline", help="fetch and extract a URI list into a store")
    p_pipe.add_argument("--input", type=Path, required=True, help="file with one URI per line")
    p_pipe.add_argument("--store", type=Path, required=True, help="store root directory")
    p_pipe.add_argument("--workers", type=int, default=1)
    p_pipe.add_argument("--strict-decode", action="store_true")
    p_pipe.add_argument("--report", type=Path, help="write a report here when done")
    add_policy_flags(p_pipe)
    add_rules_flag(p_pipe)

    p_report = sub.add_parser("report", help="outcome-class counts for a store")
    p_report.add_argument("--store", type=Path, required=True)
    p_report.add_argument("--report", type=Path, help="also write table and JSON files")
    return parser


def _cmd_fetch(args) -> int:
    policy = _policy_from_args(args)
    outcome = resolve(args.uri, policy, _load_ruleset(args.rules))
    for step in outcome.chain:
        status = step.status if step.status is not None else "-"
        print(f"{step.kind:12s} {step.from_uri} -> {step.to_uri} [{status}]")
    print(f"final: {outcome.status} {outcome.final_uri} ({len(outcome.body)} bytes, "
          f"{outcome.attempts} requests)")
    return 0


def _cmd_extract(args) -> int:
    ruleset = _load_ruleset(args.rules)
    if _KEY_RE.match(args.target):
        if args.store is None:
            print("error: extracting a key requires --store", file=sys.stderr)
            return 1
        entry = Store(args.store).get(args.target)
        if entry is None:
            print(f"error: no entry {args.target} in store", file=sys.stderr)
            return 1
        outcome = _outcome_from_entry(entry)
    else:
        outcome = resolve(args.target, _policy_from_args(args), ruleset)
    if not 200 <= outcome.status < 300:
        print(f"error: final status {outcome.status}, nothing to extract", file=sys.stderr)
        return 1
    result = extract(outcome, ruleset, strict_decode=args.strict_decode)
    if result.diagnostics:
        json.dump([d.as_json_obj() for d in result.diagnostics], sys.stderr, indent=2)
        print(file=sys.stderr)
    print(result.text)
    return 0


def _outcome_from_entry(entry) -> FetchOutcome:
    fetched_at = datetime.strptime(entry.meta.fetched_at, "%Y-%m-%dT%H:%M:%SZ").replace(
        tzinfo=timezone.utc
    )
    return FetchOutcome(
        request_uri=entry.meta.request_uri,
        final_uri=entry.meta.final_uri,
        chain=entry.meta.chain,
        status=entry.meta.status,
        headers=entry.meta.headers,
        body=entry.raw,
        fetched_at=fetched_at,
        attempts=1,
    )


def _policy_from_args(args) -> FetchPolicy:
    defaults = FetchPolicy()
    return FetchPolicy(
        max_redirects=getattr(args, "max_redirects", None) or defaults.max_redirects,
        per_host_rate=getattr(args, "rate", None) or defaults.per_host_rate,
        retry_attempts=args.retries if getattr(args, "retries", None) is not None else defaults.retry_attempts,
        request_timeout=getattr(args, "timeout", None) or defaults.request_timeout,
        user_agent=getattr(args, "user_agent", None) or defaults.user_agent,
    )


def _cmd_pipeline(args) -> int:
    config = RunConfig(
        input_path=args.input,
        store_root=args.store,
        rules_path=args.rules,
        rate=args.rate,
        retries=args.retries,
        max_redirects=args.max_redirects,
        timeout=args.timeout,
        user_agent=args.user_agent,
        workers=args.workers,
        strict_decode=args.strict_decode,
        report_path=args.report,
    )
    return run_pipeline(config)


def _cmd_report(args) -> int:
    store = Store(args.store)
    if not store.root.is_dir():
        print(f"error: store {args.store} does not exist", file=sys.stderr)
        return 1
    table, _ = format_report(store)
    print(table, end="")
    if args.report is not None:
        write_report(store, args.report)
    return 0


_COMMANDS = {
    "fetch": _cmd_fetch,
    "extract": _cmd_extract,
    "pipeline": _cmd_pipeline,
    "report": _cmd_report,
}


def run_cli(argv: list[str] | None = None) -> int:
    """Parse argv and run; 0 on success, 1 on runtime failure, 2 on usage error."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, MemharvestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
