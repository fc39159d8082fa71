"""Exception types shared across the package."""


class GuidanceError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateConfiguration(GuidanceError):
    """Point configuration cannot determine a homography."""


class TooFewPoints(GuidanceError):
    """Fewer correspondences than the solver needs."""


class PointAtInfinity(GuidanceError):
    """Projective division by (near) zero."""


class StrokeTooShort(GuidanceError):
    """Stroke arc length below the requested sampling interval."""


class ResultDegenerate(GuidanceError):
    """Cleaning left fewer than two usable points."""


class NoRegions(GuidanceError):
    """No colored region survived quantization and filtering."""


class EmptyInput(GuidanceError):
    """An operation received no data to work on."""


class DimMismatch(GuidanceError):
    """Array shapes disagree with each other or with declared dims."""


class CalibrationRejected(GuidanceError):
    """Residual too large; the pin set is unusable."""


class InfeasibleStroke(GuidanceError):
    """Stroke cannot carry a valid domino run.

    Carries the validation report listing each violated check.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptyTarget(GuidanceError):
    """Ratio undefined: target mask has no pixels."""


class EmptyNonTarget(GuidanceError):
    """Ratio undefined: non-target area has no pixels."""


class MaskOutsideBox(GuidanceError):
    """Mapped sketch mask mostly misses the box interior."""


class InvalidConfig(GuidanceError):
    """Session configuration is inconsistent."""


class NotPlanned(GuidanceError):
    """Operation requires a submitted plan first."""


class EnvironmentMissing(GuidanceError):
    """Frames cannot be processed before a baseline capture."""


class MalformedScript(GuidanceError):
    """Scenario script failed structural validation."""
