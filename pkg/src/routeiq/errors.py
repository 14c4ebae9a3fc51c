"""Exception hierarchy for the routing engine.

Errors are grouped so the CLI can map them to stable exit codes:
validation problems, data/format problems, and numerical failures.
"""


class EngineError(Exception):
    """Base class for all routing-engine errors."""

    #: Stable machine-readable identifier, used in CLI error records.
    code = "engine-error"


class ValidationError(EngineError):
    """Input violates a documented precondition or invariant."""

    code = "validation-error"


class DimensionMismatchError(ValidationError):
    code = "dimension-mismatch"


class UnknownConfigError(ValidationError):
    code = "unknown-configuration"


class LookupMissError(ValidationError):
    """Requested id is absent from an embedding store."""

    code = "lookup-miss"


class EmptyPoolError(ValidationError):
    code = "empty-pool"


class DegenerateMatrixError(ValidationError):
    """A config or query has no observed cells, or the matrix is malformed."""

    code = "degenerate-matrix"


class MissingEmbeddingError(ValidationError):
    code = "missing-embedding"


class MissingTokenDataError(ValidationError):
    code = "missing-token-data"


class MissingGroundTruthError(ValidationError):
    code = "missing-ground-truth"


class EmptyResponsesError(ValidationError):
    code = "empty-responses"


class ExhaustedCandidatesError(ValidationError):
    code = "exhausted-candidates"


class EmptyCurveError(ValidationError):
    code = "empty-curve"


class ThresholdUnreachableError(EngineError):
    """No tradeoff point reaches the requested performance threshold."""

    code = "threshold-unreachable"


class DataFormatError(EngineError):
    """A file or wire payload does not match its documented schema."""

    code = "data-format-error"


class RemoteEmbeddingError(EngineError):
    """Remote embedding service unreachable after retries."""

    code = "remote-unavailable"


class NoSnapshotError(EngineError):
    """The service has no published snapshot to route against."""

    code = "no-snapshot"


class NumericalError(EngineError):
    """A computation produced NaN/Inf or failed to converge."""

    code = "numerical-failure"
