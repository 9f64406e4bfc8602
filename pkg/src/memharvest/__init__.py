"""memharvest: acquire mementos from web archives and extract comparable text."""

__version__ = "0.1.0"

from .acquisition import (
    DEFAULT_JS_REDIRECT_PATTERNS,
    FetchOutcome,
    FetchPolicy,
    RedirectStep,
    detect_frameset,
    detect_js_redirect,
    detect_meta_refresh,
    fetch_once,
    resolve,
)
from .errors import (
    CorruptEntryError,
    DuplicateArchiveIdError,
    FrameAmbiguousError,
    InvalidUriError,
    MemharvestError,
    NetworkError,
    NoscriptCorruptionError,
    RedirectLimitError,
    RedirectLoopError,
    RuleParseError,
    TooManyRetries,
    UndecodableError,
)
from .rules import (
    ArchiveRule,
    ElementSelector,
    RuleCondition,
    RuleSet,
    builtin_rules,
    load_rules,
    match_archive,
    serialize_rules,
)
from .store import Manifest, ManifestRecord, Store, StoreEntry, key_for_uri
from .textify import (
    CharsetDecision,
    Diagnostic,
    ExtractionResult,
    detect_charset,
    detect_noscript_corruption,
    extract,
    extract_text,
    normalize_whitespace,
    parse_content_type,
    sanitize_dom,
    strip_null_bytes,
    strip_prefixes,
)

__all__ = [
    "ArchiveRule",
    "CharsetDecision",
    "CorruptEntryError",
    "DEFAULT_JS_REDIRECT_PATTERNS",
    "Diagnostic",
    "DuplicateArchiveIdError",
    "ElementSelector",
    "ExtractionResult",
    "FetchOutcome",
    "FetchPolicy",
    "FrameAmbiguousError",
    "InvalidUriError",
    "Manifest",
    "ManifestRecord",
    "MemharvestError",
    "NetworkError",
    "NoscriptCorruptionError",
    "RedirectLimitError",
    "RedirectLoopError",
    "RedirectStep",
    "RuleCondition",
    "RuleParseError",
    "RuleSet",
    "Store",
    "StoreEntry",
    "TooManyRetries",
    "UndecodableError",
    "builtin_rules",
    "detect_charset",
    "detect_frameset",
    "detect_js_redirect",
    "detect_meta_refresh",
    "detect_noscript_corruption",
    "extract",
    "extract_text",
    "fetch_once",
    "key_for_uri",
    "load_rules",
    "match_archive",
    "normalize_whitespace",
    "parse_content_type",
    "resolve",
    "sanitize_dom",
    "serialize_rules",
    "strip_null_bytes",
    "strip_prefixes",
]
