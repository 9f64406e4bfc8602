"""Turn fetched memento bytes into normalized, cross-archive-comparable text.

Pipeline for HTML media types: scrub null bytes, decide the charset from the
Content-Type header or an XML encoding declaration with a UTF-8 fallback,
refuse documents whose noscript elements corrupt the parse tree, parse,
strip script/style plus the matched archive's boilerplate elements, extract
text, strip archive text prefixes, and collapse every whitespace run to one
newline.  Everything the pipeline scrubbed or worked around is reported as a
machine-readable diagnostic.
"""
from __future__ import annotations

import codecs
import re
from dataclasses import dataclass

from .acquisition import FetchOutcome, find_meta_refresh, parse_refresh_content
from .dom import (
    Element,
    OPTIONAL_END_ELEMENTS,
    VOID_ELEMENTS,
    parse_document,
)
from .errors import NoscriptCorruptionError, UndecodableError
from .rules import ArchiveRule, RuleSet, match_archive

HTML_MEDIA_TYPES = frozenset({"text/html", "application/xhtml+xml"})

# Diagnostic codes (closed set)
NULL_BYTES_REMOVED = "null-bytes-removed"
CHARSET_FALLBACK = "charset-fallback"
CHARSET_UNDECODABLE = "charset-undecodable"
FAUX_NOSCRIPT_TAGS = "faux-noscript-tags"
NOSCRIPT_CORRUPTION = "noscript-corruption"
META_REFRESH_IGNORED = "meta-refresh-ignored"
UNSUPPORTED_MEDIA_TYPE = "unsupported-media-type"
PREFIX_STRIPPED = "prefix-stripped"


@dataclass(frozen=True)
class CharsetDecision:
    """Chosen encoding plus which step of the detection algorithm chose it."""

    charset: str
    source: str  # content-type-header | xml-declaration | default-utf8 | fallback-utf8


@dataclass(frozen=True)
class Diagnostic:
    code: str
    detail: str = ""
    count: int | None = None

    def as_json_obj(self) -> dict:
        return {"code": self.code, "detail": self.detail, "count": self.count}


@dataclass(frozen=True)
class ExtractionResult:
    """Normalized text plus everything a consumer needs to trust it."""

    text: str
    charset: CharsetDecision | None
    archive_id: str
    diagnostics: tuple[Diagnostic, ...]


def parse_content_type(header_value: str) -> tuple[str, str | None]:
    """Split a Content-Type value into (media type, charset parameter or None)."""
    parts = header_value.split(";")
    media_type = parts[0].strip().lower()
    for param in parts[1:]:
        name, _, value = param.partition("=")
        if name.strip().lower() == "charset":
            value = value.strip().strip("'\"").lower()
            return media_type, (value or None)
    return media_type, None


def strip_null_bytes(body: bytes) -> tuple[bytes, int]:
    """Delete every 0x00 byte; they hide inside tags of some mementos."""
    count = body.count(b"\x00")
    if count:
        body = body.replace(b"\x00", b"")
    return body, count


_XML_DECL_RE = re.compile(rb"^<\?xml[^>]*?encoding\s*=\s*[\"']([A-Za-z0-9._-]+)[\"']")


def _xml_declared_encoding(body: bytes) -> str | None:
    head = body[3:] if body.startswith(codecs.BOM_UTF8) else body
    match = _XML_DECL_RE.match(head[:256])
    if match:
        return match.group(1).decode("ascii").lower()
    return None


def _decodable(body: bytes, charset: str) -> bool:
    try:
        codecs.lookup(charset)
    except LookupError:
        return False
    try:
        body.decode(charset)
    except (UnicodeDecodeError, ValueError):
        return False
    return True


def detect_charset(headers: tuple[tuple[str, str], ...], body: bytes) -> CharsetDecision:
    """Decide an HTML body's encoding.

    Saves the Content-Type charset if one is present, UTF-8 otherwise; an XML
    encoding declaration overrides the saved value; the saved value is trial
    decoded and on failure UTF-8 is tried as a fallback; if UTF-8 also fails
    the body is undecodable.
    """
    charset, source = None, None
    for name, value in headers:
        if name.lower() == "content-type":
            _, declared = parse_content_type(value)
            if declared:
                charset, source = declared, "content-type-header"
            break
    if charset is None:
        charset, source = "utf-8", "default-utf8"
    xml_declared = _xml_declared_encoding(body)
    if xml_declared:
        charset, source = xml_declared, "xml-declaration"
    if _decodable(body, charset):
        return CharsetDecision(charset, source)
    if _decodable(body, "utf-8"):
        return CharsetDecision("utf-8", "fallback-utf8")
    raise UndecodableError(charset)


# --- noscript pathology detection -------------------------------------------

_NOSCRIPT_REGION_RE = re.compile(rb"<noscript\b[^>]*>(.*?)(?:</noscript\s*>|\Z)", re.S | re.I)
_REGION_TAG_RE = re.compile(rb"<(/?)([a-zA-Z][a-zA-Z0-9]*)((?:[^>\"']|\"[^\"]*\"|'[^']*')*?)(/?)>", re.S)
_FAUX_TAG_RE = re.compile(rb"&lt;\s*/?\s*[a-zA-Z][^&]{0,200}?&gt;", re.S)
_COMMENT_RE = re.compile(rb"<!--.*?-->", re.S)


def detect_noscript_corruption(body: bytes) -> Diagnostic | None:
    """Spot noscript content a strict parser cannot survive.

    An open tag inside noscript that requires an end tag and never gets one
    within the same noscript element leaves the parser's element stack
    unclosable: that is noscript-corruption.  Entity-encoded tags
    (&lt;...&gt;) inside noscript extract as literal "faux tag" text:
    that is faux-noscript-tags.
    """
    stripped = _COMMENT_RE.sub(b"", body)
    faux_count = 0
    for match in _NOSCRIPT_REGION_RE.finditer(stripped):
        region = match.group(1)
        unclosed = _unclosed_structural_tag(region)
        if unclosed:
            return Diagnostic(
                NOSCRIPT_CORRUPTION,
                detail=f"noscript leaves <{unclosed}> unclosed",
            )
        faux_count += len(_FAUX_TAG_RE.findall(region))
    if faux_count:
        return Diagnostic(
            FAUX_NOSCRIPT_TAGS,
            detail="entity-encoded tags inside noscript extract as text",
            count=faux_count,
        )
    return None


def _unclosed_structural_tag(region: bytes) -> str | None:
    stack: list[str] = []
    for close, name, _, selfclose in _REGION_TAG_RE.findall(region):
        tag = name.decode("ascii").lower()
        if tag in VOID_ELEMENTS or tag in OPTIONAL_END_ELEMENTS or selfclose:
            continue
        if not close:
            stack.append(tag)
        elif tag in stack:
            while stack and stack.pop() != tag:
                pass
    return stack[-1] if stack else None


# --- DOM sanitization and text extraction -----------------------------------


def sanitize_dom(document: Element, rule: ArchiveRule, raw_body: bytes) -> Element:
    """Remove script/style subtrees plus the rule's archive elements, in place.

    meta-property strip conditions are tested by marker containment in the
    raw body.  Removing an element keeps its tail text.  Idempotent.
    """
    for tag in ("script", "style"):
        for element in list(document.iter(tag)):
            element.drop()
    for condition, selector in rule.strip:
        if condition.kind == "meta-property" and condition.marker() not in raw_body:
            continue
        for element in list(document.iter(selector.tag_name)):
            if element.get(selector.attribute) == selector.value:
                element.drop()
    return document


def extract_text(document: Element) -> str:
    """Concatenate all text nodes in document order; entities already decoded."""
    return document.text_content()


# Whitespace here is anything invisible: ASCII/Unicode whitespace (NBSP
# included), C0/C1 control characters (old mementos do contain them), and
# stray byte-order marks.
_WS_RUN_RE = re.compile(r"[\s\x00-\x1f\x7f-\x9f\xa0\ufeff]+")


def normalize_whitespace(text: str) -> str:
    """Collapse every whitespace run to one newline; trim the ends."""
    return _WS_RUN_RE.sub("\n", text).strip("\n")


def strip_prefixes(text: str, rule: ArchiveRule, raw_body: bytes) -> tuple[str, bool]:
    """Drop one registered archive prefix from the text start, when gated.

    The gate: one of the rule's strip-selector values (the banner markers)
    must appear in the raw body.  The prefix match is exact, including its
    trailing space.
    """
    for prefix in rule.text_prefixes:
        if text.startswith(prefix) and _gate_present(rule, raw_body):
            return text[len(prefix):], True
    return text, False


def _gate_present(rule: ArchiveRule, raw_body: bytes) -> bool:
    return any(marker in raw_body for marker in rule.gate_markers())


# --- the pipeline ------------------------------------------------------------


def extract(
    outcome: FetchOutcome, ruleset: RuleSet, strict_decode: bool = False
) -> ExtractionResult:
    """Run the full text-extraction pipeline over a successful fetch.

    Non-HTML media types yield empty text and an unsupported-media-type
    diagnostic (PDFs are recognized but not extracted).  Corrupted-noscript
    documents raise NoscriptCorruptionError rather than silently extracting
    nothing.  An undecodable body is decoded leniently with replacement
    characters unless strict_decode is set, in which case it raises.
    """
    rule = match_archive(outcome.final_uri, ruleset)
    diagnostics: list[Diagnostic] = []

    content_type = outcome.header("content-type")
    # absent Content-Type is treated as HTML; dispatch never sniffs content
    media_type = parse_content_type(content_type)[0] if content_type else "text/html"
    if media_type not in HTML_MEDIA_TYPES:
        diagnostics.append(
            Diagnostic(UNSUPPORTED_MEDIA_TYPE, detail=media_type or "unknown")
        )
        return ExtractionResult("", None, rule.archive_id, tuple(diagnostics))

    body, null_count = strip_null_bytes(outcome.body)
    if null_count:
        diagnostics.append(
            Diagnostic(NULL_BYTES_REMOVED, detail="null bytes deleted before parsing", count=null_count)
        )

    try:
        decision = detect_charset(outcome.headers, body)
        text = body.decode(decision.charset)
        if decision.source == "fallback-utf8":
            diagnostics.append(
                Diagnostic(CHARSET_FALLBACK, detail="declared charset failed; decoded as UTF-8")
            )
    except UndecodableError as exc:
        if strict_decode:
            raise
        decision = CharsetDecision("utf-8", "fallback-utf8")
        text = body.decode("utf-8", errors="replace")
        diagnostics.append(
            Diagnostic(
                CHARSET_UNDECODABLE,
                detail=f"declared {exc.declared!r} and UTF-8 both failed; "
                "decoded with replacement characters",
            )
        )

    noscript = detect_noscript_corruption(body)
    if noscript is not None:
        if noscript.code == NOSCRIPT_CORRUPTION:
            raise NoscriptCorruptionError(noscript.detail)
        diagnostics.append(noscript)

    refresh_content = find_meta_refresh(body)
    if refresh_content is not None:
        parsed = parse_refresh_content(refresh_content)
        if parsed is None:
            detail = f"unparseable refresh content {refresh_content!r}"
        elif parsed[1] is None:
            detail = f"self reload after {parsed[0]:g}s"
        else:
            detail = f"refresh target {parsed[1]} not followed"
        diagnostics.append(Diagnostic(META_REFRESH_IGNORED, detail=detail))

    document = parse_document(text)
    sanitize_dom(document, rule, body)
    raw_text = extract_text(document)
    raw_text, stripped = strip_prefixes(raw_text, rule, body)
    if stripped:
        diagnostics.append(
            Diagnostic(PREFIX_STRIPPED, detail="archive text prefix removed")
        )
    return ExtractionResult(
        text=normalize_whitespace(raw_text),
        charset=decision,
        archive_id=rule.archive_id,
        diagnostics=tuple(diagnostics),
    )


def diagnostics_to_json(diagnostics: tuple[Diagnostic, ...]) -> list[dict]:
    return [d.as_json_obj() for d in diagnostics]


def diagnostics_from_json(items: list[dict]) -> tuple[Diagnostic, ...]:
    return tuple(
        Diagnostic(code=i["code"], detail=i.get("detail", ""), count=i.get("count"))
        for i in items
    )
