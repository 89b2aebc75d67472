"""Exception hierarchy shared by all engine layers.

Every error raised on purpose by this package derives from ReuseError so
callers can catch the family in one clause. Service code maps these to
HTTP status codes; see service.py.
"""


class ReuseError(Exception):
    """Base class for all package errors."""


class DuplicateId(ReuseError):
    """A language or structure with this identifier is already registered."""


class MalformedLanguage(ReuseError):
    """Language definition violates a structural invariant."""


class UnknownLanguage(ReuseError):
    """No language registered under the given identifier."""


class SchemeMismatch(ReuseError):
    """Query binding does not cover any scheme of its language."""


class DomainViolation(ReuseError):
    """A bound value lies outside the variable's declared domain."""


class NoDecomposer(ReuseError):
    """No decomposition rule registered for the query language."""


class EmptyDecomposition(ReuseError):
    """Decomposition produced no requests."""


class NoCompleter(ReuseError):
    """No completion rule registered for the request language."""


class MissingResponses(ReuseError):
    """Aggregation invoked with an incomplete response set."""


class MissingSignal(ReuseError):
    """Computation requires a trace signal the result does not carry."""


class EmptyResults(ReuseError):
    """Computation invoked with no results."""


class DuplicateKeyWithDifferentValue(ReuseError):
    """Store insert would overwrite an existing entry with a different value."""


class MalformedConnection(ReuseError):
    """Connection record payload does not match its tag's signature."""


class InvalidLayout(ReuseError):
    """Experiment parameters are unusable (under-specified or out of range)."""


class ExecutionFailure(ReuseError):
    """Executor failed; the in-flight request branch was not committed."""


class CorruptLog(ReuseError):
    """Persisted store file failed framing or checksum validation."""
