"""Exception types shared across the library.

Every error raised on purpose by gradtest derives from GradtestError, so
callers (the CLI in particular) can separate expected failure modes from
genuine bugs.
"""


class GradtestError(Exception):
    """Base class for all gradtest errors."""


class InvalidMeasure(GradtestError):
    """Measure construction input violates the representation contract."""


class NonFiniteFunctionValue(GradtestError):
    """An integrand returned NaN or infinity on the support."""


class MixedKindUnsupported(GradtestError):
    """Distance between a discrete and a continuous measure is undefined.

    With the two shipped measure kinds a mixed pair is always mutually
    singular, so the distance functions return their singular values and
    never actually raise this.  The class is kept for API completeness.
    """


class ValueOutsideSupport(GradtestError):
    """A data point has no value under a support-indexed function."""


class InvalidTangent(GradtestError):
    """Tangent values are misaligned with the base measure's support."""


class BaseMismatch(GradtestError):
    """Two tangents that must share base measures do not."""


class DegenerateDensity(GradtestError):
    """A curve density vanished at a sampled point (log-likelihood -inf)."""


class QuotientByZero(GradtestError):
    """Quotient functional evaluated where the denominator mean is zero."""


class DegenerateGradient(GradtestError):
    """Both gradient components have zero norm; the test is undefined."""


class DegenerateTangent(GradtestError):
    """Tangent with zero norm where a positive norm is required."""


class TooFewObservations(GradtestError):
    """Sample too small for the requested estimator."""


class TiedObservations(GradtestError):
    """Tied pooled values where the continuous-model contract forbids them."""


class OrthogonalTangent(GradtestError):
    """Tangent orthogonal to the gradient; the local power is trivial."""


class DomainError(GradtestError):
    """Numeric argument outside the mathematical domain."""


class UnsupportedFootpoint(GradtestError):
    """Operation requires an atomic footpoint measure."""


class ConfigError(GradtestError):
    """Invalid run configuration; message names the offending field."""
