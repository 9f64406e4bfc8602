"""Exception hierarchy shared across memharvest."""
from __future__ import annotations


class MemharvestError(Exception):
    """Base class for every error raised by this package."""


class InvalidUriError(MemharvestError):
    """A URI is not an absolute http(s) URI with a parseable host."""

    def __init__(self, uri: str, reason: str = "", line: int | None = None):
        self.uri = uri
        self.line = line
        msg = f"invalid URI: {uri!r}"
        if reason:
            msg += f" ({reason})"
        if line is not None:
            msg += f" at line {line}"
        super().__init__(msg)


class RuleParseError(MemharvestError):
    """A rule document is malformed; carries line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class DuplicateArchiveIdError(RuleParseError):
    """Two rules in one document share an archive_id."""

    def __init__(self, archive_id: str):
        self.archive_id = archive_id
        super().__init__(f"duplicate archive_id {archive_id!r} in rule document")


class NetworkError(MemharvestError):
    """Connection-level failure (refused, reset, DNS)."""


class TooManyRetries(NetworkError):
    """Transient failures (timeout or 5xx) exhausted the retry budget."""

    def __init__(self, uri: str, attempts: int, last: str):
        self.uri = uri
        self.attempts = attempts
        super().__init__(f"{uri}: gave up after {attempts} attempts ({last})")


class RedirectLimitError(MemharvestError):
    """Following one more redirect would exceed the configured maximum."""


class RedirectLoopError(MemharvestError):
    """The same (kind, target) redirect step recurred within one resolution."""


class FrameAmbiguousError(MemharvestError):
    """A frameset offers several frames and no rule selects one."""


class UndecodableError(MemharvestError):
    """Body failed to decode under the declared charset and under UTF-8."""

    def __init__(self, declared: str):
        self.declared = declared
        super().__init__(
            f"body undecodable: declared charset {declared!r} failed and UTF-8 failed"
        )


class NoscriptCorruptionError(MemharvestError):
    """A noscript element leaves an unclosed structural tag on the stack."""

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"noscript corruption: {detail}")


class CorruptEntryError(MemharvestError):
    """A store entry on disk fails validation."""
