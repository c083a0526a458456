"""Exception hierarchy for the mpg package."""


class MPGError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateQuaternion(MPGError, ValueError):
    pass


class NonUnitAxis(MPGError, ValueError):
    pass


class NonUnitRotationPart(MPGError, ValueError):
    pass


class NonUnitTangentPoint(MPGError, ValueError):
    pass


class NearOrthogonalRotation(MPGError, ValueError):
    """A rotation is too close to the equator of a chart to be lifted."""


class NotPositiveDefinite(MPGError, ValueError):
    pass


class NonSymmetric(MPGError, ValueError):
    pass


class ChartsTooFarApart(MPGError, ValueError):
    """Two tangent points are further apart than the sharing threshold."""


class NoCompatiblePairs(MPGError):
    pass


class AllComponentsDropped(MPGError):
    pass


class TargetUnreachable(MPGError):
    pass


class TooFewSamples(MPGError, ValueError):
    pass


class OrphanSample(MPGError):
    """A sample cannot be lifted into any component chart."""


class EmptyComponent(MPGError):
    pass


class SchemaError(MPGError, ValueError):
    """Malformed serialized input. ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
