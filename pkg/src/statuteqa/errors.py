"""Exception hierarchy shared across the package."""


class StatuteQAError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(StatuteQAError):
    """Input file could not be parsed (carries position information)."""


class ValidationError(StatuteQAError):
    """Well-formed input that violates a documented invariant."""


class TransportError(StatuteQAError):
    """Scorer backend unreachable or timed out; safe to retry."""


class ProtocolError(StatuteQAError):
    """Scorer backend replied with a malformed response; never retried."""
