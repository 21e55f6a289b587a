"""Exception types shared across the package."""


class QincompatError(Exception):
    """Base class for all library errors."""


class DimensionError(QincompatError):
    """Operand dimensions are inconsistent or do not factor as required."""


class NotHermitianError(QincompatError):
    """A matrix expected to be Hermitian is not, within tolerance."""


class InvalidDistributionError(QincompatError):
    """A probability vector has negative weight or does not sum to one."""


class NotAStateError(QincompatError):
    """A matrix expected to be a density operator is not PSD or not trace 1."""


class InvalidPovmError(QincompatError):
    """Effects are not PSD or do not sum to the identity."""


class InvalidInstrumentError(QincompatError):
    """Operation blocks are not PSD or do not sum to a trace-preserving map."""


class WeightOutOfRangeError(QincompatError):
    """A convex-combination weight lies outside [0, 1]."""


class ConstraintViolationError(QincompatError):
    """Parameters violate the constraints of a structured construction."""


class DegeneratePolygonError(QincompatError):
    """Polygon vertices are collinear or too few to span a 2-D region."""


class OracleError(QincompatError):
    """A membership oracle failed to classify a point."""
