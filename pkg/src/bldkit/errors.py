"""Exception hierarchy shared by all bldkit modules."""


class BLDError(Exception):
    """Base class for every error raised by bldkit."""


class BoundaryMarginError(BLDError):
    """A finite-difference stencil would leave the mapping's domain."""


class EvaluationError(BLDError):
    """The mapping returned a non-finite value."""


class DomainError(BLDError):
    """A curve leaves the mapping's domain.

    ``parameter`` is the first offending curve parameter that was found.
    """

    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class DegenerateCurveError(BLDError):
    """A distortion ratio was requested for a curve of zero length."""


class ConfigurationError(BLDError):
    """Invalid or empty configuration (e.g. an empty curve family)."""


class InconclusiveError(BLDError):
    """A numerical procedure could not reach a verdict."""


class TargetTooCloseError(BLDError):
    """The degree target lies (numerically) on the image of the boundary."""


class PreconditionError(BLDError, ValueError):
    """An operation was called outside its stated precondition."""


class WitnessStageError(BLDError):
    """A stage of the witness pipeline failed; ``stage`` names it."""

    stage = "witness"

    def __init__(self, message, diagnostics=None, stage=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
        if stage is not None:
            self.stage = stage


class EmptyLusinError(WitnessStageError):
    stage = "build_lusin_set"


class ContinuityError(WitnessStageError):
    stage = "continuity"


class DensityError(WitnessStageError):
    stage = "find_R"


class DirectionSearchError(WitnessStageError):
    stage = "find_direction"


class UnsupportedDimensionError(BLDError):
    """Plotting was requested for data that is not planar."""
