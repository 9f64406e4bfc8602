"""Archive boilerplate rules: which elements each archive injects and how to spot it.

Rules are plain data so a new archive can be covered by a JSON rule file
instead of a code change.  Matching is by hostname only; the first rule in
list order whose host pattern matches wins, and an always-present fallback
(no strips, no prefixes) covers every other host.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from urllib.parse import urlsplit

from .errors import DuplicateArchiveIdError, InvalidUriError, RuleParseError

FALLBACK_ARCHIVE_ID = "default"


@dataclass(frozen=True)
class ElementSelector:
    """Selects elements with an exact tag/attribute/value triple."""

    tag_name: str
    attribute: str
    value: str

    def __post_init__(self):
        for name in ("tag_name", "attribute"):
            v = getattr(self, name)
            if not v or not v.isascii() or v != v.lower():
                raise ValueError(f"{name} must be non-empty ASCII lowercase, got {v!r}")


@dataclass(frozen=True)
class RuleCondition:
    """Gate for a strip entry: unconditional, or keyed on a meta-property marker."""

    kind: str  # "always" | "meta-property"
    property: str = ""
    content: str = ""

    def __post_init__(self):
        if self.kind not in ("always", "meta-property"):
            raise ValueError(f"unknown condition kind {self.kind!r}")
        if self.kind == "meta-property" and not (self.property and self.content):
            raise ValueError("meta-property condition requires property and content")

    def marker(self) -> bytes:
        """Byte marker whose containment in the raw body satisfies the condition."""
        return f'<meta property="{self.property}" content="{self.content}"'.encode()


ALWAYS = RuleCondition("always")


@dataclass(frozen=True)
class ArchiveRule:
    """Everything known about one archive's additions to replayed pages."""

    archive_id: str
    host_patterns: tuple[str, ...] = ()
    strip: tuple[tuple[RuleCondition, ElementSelector], ...] = ()
    text_prefixes: tuple[str, ...] = ()
    frame_select: str | None = None
    notes: str = ""

    def __post_init__(self):
        if not self.archive_id:
            raise ValueError("archive_id must be non-empty")
        for p in self.text_prefixes:
            if not p:
                raise ValueError("text prefixes must be non-empty")

    def gate_markers(self) -> tuple[bytes, ...]:
        """Byte markers whose presence in a raw body signals this archive's banner."""
        return tuple(sel.value.encode() for _, sel in self.strip)


@dataclass(frozen=True)
class RuleSet:
    """Ordered archive rules plus the single fallback; immutable once built."""

    rules: tuple[ArchiveRule, ...]
    fallback: ArchiveRule

    def __post_init__(self):
        seen = set()
        for r in self.rules:
            if r.archive_id in seen:
                raise ValueError(f"archive_id {r.archive_id!r} repeated in RuleSet")
            seen.add(r.archive_id)

    def by_id(self, archive_id: str) -> ArchiveRule | None:
        if archive_id == self.fallback.archive_id:
            return self.fallback
        for r in self.rules:
            if r.archive_id == archive_id:
                return r
        return None


def builtin_rules() -> RuleSet:
    """Rules for the archives whose banner markup is known to this package."""
    wayback = ArchiveRule(
        archive_id="wayback",
        host_patterns=("web.archive.org", "*.archive.org", "wayback.*"),
        strip=((ALWAYS, ElementSelector("div", "id", "wm-ipp")),),
        notes="Wayback replay toolbar lives in div#wm-ipp.",
    )
    uk = ArchiveRule(
        archive_id="uk-national-archives",
        host_patterns=("webarchive.nationalarchives.gov.uk", "*.nationalarchives.gov.uk"),
        # Both observed spellings of the infobox id are registered.
        strip=(
            (ALWAYS, ElementSelector("div", "id", "webArchiveInfobox")),
            (ALWAYS, ElementSelector("div", "id", "webarchiveInfobox")),
        ),
        text_prefixes=("[ARCHIVED CONTENT] ",),
        notes="Banner div plus an archived-content marker prepended to the text.",
    )
    proni = ArchiveRule(
        archive_id="proni",
        host_patterns=("webarchive.proni.gov.uk", "*.proni.gov.uk"),
        strip=((ALWAYS, ElementSelector("div", "id", "PRONIBANNER")),),
        text_prefixes=("[ARCHIVED CONTENT] ",),
        notes="Banner and sidebar live in div#PRONIBANNER.",
    )
    archive_is_meta = RuleCondition("meta-property", property="og:site_name", content="archive.is")
    archive_is = ArchiveRule(
        archive_id="archive-is",
        host_patterns=("archive.is", "*.archive.is", "archive.today", "*.archive.today"),
        strip=(
            (archive_is_meta, ElementSelector("div", "id", "HEADER")),
            (archive_is_meta, ElementSelector("table", "id", "hashtags")),
        ),
        notes="HEADER/hashtags are stripped only when the og:site_name marker is present, "
        "since original pages may reuse the HEADER id.",
    )
    webcite = ArchiveRule(
        archive_id="webcite",
        host_patterns=("webcitation.org", "*.webcitation.org"),
        frame_select="main",
        notes="Serves a frameset; the memento body is in the frame named 'main'.",
    )
    fallback = ArchiveRule(archive_id=FALLBACK_ARCHIVE_ID)
    return RuleSet(rules=(wayback, uk, proni, archive_is, webcite), fallback=fallback)


def _host_pattern_regex(pattern: str) -> re.Pattern[str]:
    # '*' stands for one or more whole labels; other labels match literally.
    parts = []
    for label in pattern.lower().split("."):
        if label == "*":
            parts.append(r"[^.]+(?:\.[^.]+)*")
        else:
            parts.append(re.escape(label))
    return re.compile(r"^" + r"\.".join(parts) + r"$")


def host_matches(pattern: str, host: str) -> bool:
    return _host_pattern_regex(pattern).match(host.lower()) is not None


def uri_host(uri: str) -> str:
    """Hostname of an absolute http(s) URI, lowercased, or InvalidUriError."""
    try:
        parts = urlsplit(uri)
    except ValueError as exc:
        raise InvalidUriError(uri, str(exc)) from None
    if parts.scheme not in ("http", "https"):
        raise InvalidUriError(uri, "scheme must be http or https")
    host = parts.hostname
    if not host:
        raise InvalidUriError(uri, "no host")
    return host


def match_archive(uri: str, ruleset: RuleSet) -> ArchiveRule:
    """First rule whose host pattern matches the URI's host, else the fallback."""
    host = uri_host(uri)
    for rule in ruleset.rules:
        if any(host_matches(p, host) for p in rule.host_patterns):
            return rule
    return ruleset.fallback


# --- rule file format ------------------------------------------------------
#
# UTF-8 JSON: {"rules": [{"archive_id": ..., "hosts": [...], "strip": [...],
# "prefixes": [...], "frame_select": ..., "notes": ...}]}.  Each strip entry is
# {"when": {"kind": "always"} | {"kind": "meta-property", "property": p,
# "content": c}, "tag": t, "attr": a, "value": v}.  Unknown keys are rejected.

_RULE_KEYS = {"archive_id", "hosts", "strip", "prefixes", "frame_select", "notes"}
_STRIP_KEYS = {"when", "tag", "attr", "value"}
_WHEN_KEYS = {"kind", "property", "content"}


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise RuleParseError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_condition(obj, where: str) -> RuleCondition:
    if not isinstance(obj, dict):
        raise RuleParseError(f"{where}.when must be an object")
    _reject_unknown(obj, _WHEN_KEYS, f"{where}.when")
    kind = obj.get("kind")
    if kind == "always":
        return ALWAYS
    if kind == "meta-property":
        try:
            return RuleCondition("meta-property", obj.get("property", ""), obj.get("content", ""))
        except ValueError as exc:
            raise RuleParseError(f"{where}.when: {exc}") from None
    raise RuleParseError(f"{where}.when.kind must be 'always' or 'meta-property'")


def _parse_strip_entry(obj, where: str) -> tuple[RuleCondition, ElementSelector]:
    if not isinstance(obj, dict):
        raise RuleParseError(f"{where} must be an object")
    _reject_unknown(obj, _STRIP_KEYS, where)
    for key in ("when", "tag", "attr", "value"):
        if key not in obj:
            raise RuleParseError(f"{where} missing required key {key!r}")
    condition = _parse_condition(obj["when"], where)
    try:
        selector = ElementSelector(obj["tag"], obj["attr"], obj["value"])
    except (TypeError, ValueError) as exc:
        raise RuleParseError(f"{where}: {exc}") from None
    return condition, selector


def _parse_rule(obj, index: int) -> ArchiveRule:
    where = f"rules[{index}]"
    if not isinstance(obj, dict):
        raise RuleParseError(f"{where} must be an object")
    _reject_unknown(obj, _RULE_KEYS, where)
    archive_id = obj.get("archive_id")
    if not isinstance(archive_id, str) or not archive_id:
        raise RuleParseError(f"{where}.archive_id must be a non-empty string")
    if archive_id == FALLBACK_ARCHIVE_ID:
        raise RuleParseError(f"{where}.archive_id {FALLBACK_ARCHIVE_ID!r} is reserved for the fallback")
    hosts = obj.get("hosts")
    if not isinstance(hosts, list) or not all(isinstance(h, str) for h in hosts):
        raise RuleParseError(f"{where}.hosts must be an array of host globs")
    strip = tuple(
        _parse_strip_entry(s, f"{where}.strip[{i}]") for i, s in enumerate(obj.get("strip", []))
    )
    prefixes = obj.get("prefixes", [])
    if not isinstance(prefixes, list) or not all(isinstance(p, str) and p for p in prefixes):
        raise RuleParseError(f"{where}.prefixes must be an array of non-empty strings")
    frame_select = obj.get("frame_select")
    if frame_select is not None and not isinstance(frame_select, str):
        raise RuleParseError(f"{where}.frame_select must be a string or null")
    notes = obj.get("notes", "")
    if not isinstance(notes, str):
        raise RuleParseError(f"{where}.notes must be a string")
    return ArchiveRule(
        archive_id=archive_id,
        host_patterns=tuple(hosts),
        strip=strip,
        text_prefixes=tuple(prefixes),
        frame_select=frame_select,
        notes=notes,
    )


def parse_rule_document(document: str) -> list[ArchiveRule]:
    """Parse a rule file into rules, without merging over the builtins."""
    try:
        data = json.loads(document) if document.strip() else {"rules": []}
    except json.JSONDecodeError as exc:
        raise RuleParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if not isinstance(data, dict):
        raise RuleParseError("top level must be an object")
    _reject_unknown(data, {"rules"}, "document")
    items = data.get("rules", [])
    if not isinstance(items, list):
        raise RuleParseError("'rules' must be an array")
    rules = [_parse_rule(obj, i) for i, obj in enumerate(items)]
    seen = set()
    for r in rules:
        if r.archive_id in seen:
            raise DuplicateArchiveIdError(r.archive_id)
        seen.add(r.archive_id)
    return rules


def load_rules(document: str) -> RuleSet:
    """Parse a rule document and merge it over the builtins.

    A user rule whose archive_id matches a builtin replaces that builtin in
    place; new archive_ids are appended after the builtins.
    """
    base = builtin_rules()
    merged = list(base.rules)
    ids = [r.archive_id for r in merged]
    for rule in parse_rule_document(document):
        if rule.archive_id in ids:
            merged[ids.index(rule.archive_id)] = rule
        else:
            merged.append(rule)
            ids.append(rule.archive_id)
    return RuleSet(rules=tuple(merged), fallback=base.fallback)


def load_rules_file(path) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return load_rules(fh.read())


def serialize_rules(ruleset: RuleSet) -> str:
    """Rule-file JSON for a RuleSet; load_rules() of the result round-trips."""

    def condition_obj(c: RuleCondition):
        if c.kind == "always":
            return {"kind": "always"}
        return {"kind": "meta-property", "property": c.property, "content": c.content}

    out = []
    for r in ruleset.rules:
        obj = {
            "archive_id": r.archive_id,
            "hosts": list(r.host_patterns),
            "strip": [
                {"when": condition_obj(c), "tag": s.tag_name, "attr": s.attribute, "value": s.value}
                for c, s in r.strip
            ],
            "prefixes": list(r.text_prefixes),
            "frame_select": r.frame_select,
        }
        if r.notes:
            obj["notes"] = r.notes
        out.append(obj)
    return json.dumps({"rules": out}, indent=2, ensure_ascii=False) + "\n"
