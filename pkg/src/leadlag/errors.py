"""Exception hierarchy shared across the package.

Everything derives from LeadLagError so callers can catch the package's
failures with a single except clause.  Where a built-in type is the natural
category (ValueError, KeyError, ZeroDivisionError) the exception inherits
from it as well, so generic handlers keep working.
"""


class LeadLagError(Exception):
    """Base class for every error raised by this package."""


class EmptyInput(LeadLagError, ValueError):
    """An operation received an empty series or collection."""


class InsufficientData(LeadLagError, ValueError):
    """Not enough observations to satisfy an operation's minimum sample."""


class DegenerateSeries(LeadLagError, ValueError):
    """A series is constant (zero variance) where variation is required."""


class LengthMismatch(LeadLagError, ValueError):
    """Paired inputs have incompatible lengths or date grids."""


class DivisionByZero(LeadLagError, ZeroDivisionError):
    """A denominator price was exactly zero."""


class InvalidParameter(LeadLagError, ValueError):
    """A parameter is outside its documented domain."""


class SingularDesign(LeadLagError, ValueError):
    """A regression design matrix is rank deficient."""


class NoValidDirection(LeadLagError):
    """Neither ordering of a pair produced a usable causality test."""


class InsufficientUniverse(LeadLagError, ValueError):
    """Fewer than two usable markets were supplied for screening."""


class IncompleteMetadata(LeadLagError, ValueError):
    """Event metadata is missing a field needed to build a prompt."""


class MalformedResponse(LeadLagError, ValueError):
    """A scorer response contained no parseable JSON object."""


class SchemaViolation(LeadLagError, ValueError):
    """A parsed object has missing, mistyped, or inconsistent fields."""


class ScoringFailed(LeadLagError):
    """All scoring attempts for one pair failed; the pair degrades to
    strength 'none' rather than being dropped."""

    def __init__(self, leader_id: str, follower_id: str, reason: str):
        self.leader_id = leader_id
        self.follower_id = follower_id
        self.reason = reason
        super().__init__(f"scoring failed for ({leader_id} -> {follower_id}): {reason}")


class UnknownMarket(LeadLagError, KeyError):
    """A market id was referenced that the given mapping does not contain."""

    def __str__(self) -> str:  # KeyError.__str__ would repr() the message
        return self.args[0] if self.args else ""


class SchemaError(LeadLagError, ValueError):
    """An input file does not match its documented schema."""


class DuplicateRow(LeadLagError, ValueError):
    """An input file repeats a key that must be unique."""


class RangeError(LeadLagError, ValueError):
    """A value in an input file is outside its legal range."""


class NoWindows(LeadLagError, ValueError):
    """The data range is too short to fit a single train/test window."""
