"""Exception types shared across the package."""


class GaugeflowError(Exception):
    """Base class for all package-specific errors."""


class DegenerateMetric(GaugeflowError):
    """The induced metric lost rank (det g below the immersion threshold)."""


class RankMismatch(GaugeflowError):
    """A field of unexpected tensor rank was passed to an operator."""


class UnknownQuantity(GaugeflowError):
    """Requested geometric quantity is not in the supported set."""


class UnsupportedConvention(GaugeflowError):
    """Requested stress convention is not available for this rank."""


class ValidationError(GaugeflowError):
    """A configuration file or config object failed validation."""


class ParseError(GaugeflowError):
    """A configuration file could not be parsed at all."""


class BadConfig(GaugeflowError):
    """A flow configuration violates a structural invariant."""


class SchemaMismatch(GaugeflowError):
    """An output file does not carry the schema version a reader expects."""


class SolverFailure(GaugeflowError):
    """The linear solve did not meet the requested residual tolerance."""


class ImmersionLost(GaugeflowError):
    """A time step produced a non-immersed (folded or degenerate) surface."""
