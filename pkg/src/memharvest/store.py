"""Content-addressed on-disk persistence for fetch outcomes and their text.

Each entry lives under <root>/<first two hex>/<key>/ as raw.bin, meta.json,
text.txt and diagnostics.json, keyed by the SHA-256 of the exact request URI
string (no normalization: archives are sensitive to exact URI bytes).  Writes
are staged and renamed so readers never see a partial entry.  A run appends
one line per attempted URI to <root>/manifest.tsv, which is what reports and
resumption read.
"""
from __future__ import annotations

import hashlib
import json
import os
import shutil
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .acquisition import FetchOutcome, RedirectStep
from .errors import CorruptEntryError
from .textify import Diagnostic, diagnostics_from_json, diagnostics_to_json

OUTCOME_CLASSES = (
    "ok",
    "redirect-limit",
    "network-error",
    "noscript-corruption",
    "undecodable",
    "unsupported-media-type",
)

MANIFEST_NAME = "manifest.tsv"


def key_for_uri(uri: str) -> str:
    """Lowercase hex SHA-256 of the verbatim URI string."""
    if not uri:
        raise ValueError("uri must be non-empty")
    return hashlib.sha256(uri.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EntryMeta:
    request_uri: str
    final_uri: str
    status: int
    fetched_at: str  # ISO-8601 UTC, e.g. "2016-01-01T00:00:00Z"
    chain: tuple[RedirectStep, ...]
    headers: tuple[tuple[str, str], ...]
    archive_id: str


@dataclass(frozen=True)
class StoreEntry:
    key: str
    meta: EntryMeta
    raw: bytes
    text: str | None = None
    diagnostics: tuple[Diagnostic, ...] = ()


def entry_from_outcome(
    outcome: FetchOutcome,
    archive_id: str,
    text: str | None = None,
    diagnostics: tuple[Diagnostic, ...] = (),
) -> StoreEntry:
    meta = EntryMeta(
        request_uri=outcome.request_uri,
        final_uri=outcome.final_uri,
        status=outcome.status,
        fetched_at=outcome.fetched_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        chain=outcome.chain,
        headers=outcome.headers,
        archive_id=archive_id,
    )
    return StoreEntry(
        key=key_for_uri(outcome.request_uri),
        meta=meta,
        raw=outcome.body,
        text=text,
        diagnostics=diagnostics,
    )


def _meta_to_json(meta: EntryMeta) -> dict:
    return {
        "request_uri": meta.request_uri,
        "final_uri": meta.final_uri,
        "status": meta.status,
        "fetched_at": meta.fetched_at,
        "chain": [
            {"kind": s.kind, "from": s.from_uri, "to": s.to_uri, "status": s.status, "delay": s.delay}
            for s in meta.chain
        ],
        "headers": [[k, v] for k, v in meta.headers],
        "archive_id": meta.archive_id,
    }


def _meta_from_json(data: dict) -> EntryMeta:
    try:
        chain = tuple(
            RedirectStep(
                kind=s["kind"],
                from_uri=s["from"],
                to_uri=s["to"],
                status=s.get("status"),
                delay=s.get("delay"),
            )
            for s in data["chain"]
        )
        return EntryMeta(
            request_uri=data["request_uri"],
            final_uri=data["final_uri"],
            status=int(data["status"]),
            fetched_at=data["fetched_at"],
            chain=chain,
            headers=tuple((k, v) for k, v in data["headers"]),
            archive_id=data["archive_id"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptEntryError(f"invalid meta.json: {exc}") from exc


@dataclass(frozen=True)
class ManifestRecord:
    key: str
    request_uri: str
    status: int
    outcome_class: str


@dataclass(frozen=True)
class Manifest:
    records: tuple[ManifestRecord, ...]

    def latest_by_key(self) -> dict[str, ManifestRecord]:
        """Last record per key; re-attempted URIs count once, by final outcome."""
        out: dict[str, ManifestRecord] = {}
        for r in self.records:
            out[r.key] = r
        return out

    def class_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in OUTCOME_CLASSES}
        for r in self.latest_by_key().values():
            counts[r.outcome_class] = counts.get(r.outcome_class, 0) + 1
        return counts


class Store:
    """Entry storage rooted at one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _entry_dir(self, key: str) -> Path:
        return self.root / key[:2] / key

    def put(self, entry: StoreEntry) -> None:
        """Write an entry atomically (stage, then rename into place)."""
        stage = self.root / ".stage" / f"{entry.key}.{uuid.uuid4().hex}"
        stage.mkdir(parents=True)
        try:
            (stage / "raw.bin").write_bytes(entry.raw)
            (stage / "meta.json").write_text(
                json.dumps(_meta_to_json(entry.meta), ensure_ascii=False, indent=1),
                encoding="utf-8",
            )
            if entry.text is not None:
                (stage / "text.txt").write_text(entry.text, encoding="utf-8", newline="")
            (stage / "diagnostics.json").write_text(
                json.dumps(diagnostics_to_json(entry.diagnostics), ensure_ascii=False),
                encoding="utf-8",
            )
            target = self._entry_dir(entry.key)
            target.parent.mkdir(parents=True, exist_ok=True)
            if target.exists():
                shutil.rmtree(target)  # concurrent same-key put: last writer wins
            os.rename(stage, target)
        finally:
            shutil.rmtree(stage, ignore_errors=True)

    def get(self, key: str) -> StoreEntry | None:
        d = self._entry_dir(key)
        meta_path = d / "meta.json"
        if not meta_path.is_file():
            return None
        try:
            meta = _meta_from_json(json.loads(meta_path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise CorruptEntryError(f"unreadable meta.json for {key}: {exc}") from exc
        if key_for_uri(meta.request_uri) != key:
            raise CorruptEntryError(f"entry {key} does not hash to its request_uri")
        raw_path = d / "raw.bin"
        if not raw_path.is_file():
            raise CorruptEntryError(f"entry {key} has no raw.bin")
        text_path = d / "text.txt"
        text = text_path.read_text(encoding="utf-8") if text_path.is_file() else None
        diag_path = d / "diagnostics.json"
        diagnostics: tuple[Diagnostic, ...] = ()
        if diag_path.is_file():
            diagnostics = diagnostics_from_json(json.loads(diag_path.read_text(encoding="utf-8")))
        return StoreEntry(
            key=key, meta=meta, raw=raw_path.read_bytes(), text=text, diagnostics=diagnostics
        )

    def has(self, key: str) -> bool:
        return (self._entry_dir(key) / "meta.json").is_file()

    def keys(self) -> Iterator[str]:
        """All stored entry keys, without loading bodies."""
        if not self.root.is_dir():
            return
        for shard in sorted(self.root.iterdir()):
            if shard.name == ".stage" or not shard.is_dir() or len(shard.name) != 2:
                continue
            for entry in sorted(shard.iterdir()):
                if (entry / "meta.json").is_file():
                    yield entry.name

    def list(self) -> Manifest:
        """The run manifest recorded under this root (empty when none exists)."""
        return read_manifest(self.root / MANIFEST_NAME)

    def manifest_writer(self) -> "ManifestWriter":
        return ManifestWriter(self.root / MANIFEST_NAME)


class ManifestWriter:
    """Append-only manifest.tsv writer; appends are serialized internally."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, record: ManifestRecord) -> None:
        if record.outcome_class not in OUTCOME_CLASSES:
            raise ValueError(f"unknown outcome class {record.outcome_class!r}")
        if any(ch in record.request_uri for ch in "\t\n\r"):
            raise ValueError(f"uri {record.request_uri!r} would corrupt the manifest")
        line = "\t".join(
            (record.key, record.request_uri, str(record.status), record.outcome_class)
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8", newline="") as fh:
                fh.write(line + "\n")
                fh.flush()


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    if not path.is_file():
        return Manifest(records=())
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, request_uri, status, outcome_class = line.split("\t")
            records.append(ManifestRecord(key, request_uri, int(status), outcome_class))
    return Manifest(records=tuple(records))
