"""Exception hierarchy shared across the package."""


class SivcError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SivcError):
    """Raised when input data violates a row or dataset invariant.

    ``problems`` holds ``(row_index, message)`` pairs; ``row_index`` is
    ``None`` for dataset-level violations.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [
            f"row {idx}: {msg}" if idx is not None else msg
            for idx, msg in self.problems
        ]
        super().__init__("; ".join(lines))


class DegenerateDirectionError(SivcError):
    """Zero vector cannot be normalized to a direction."""


class UnidentifiableSignError(SivcError):
    """First component is zero, so the sign convention cannot be applied."""


class NoLocalDataError(SivcError):
    """All kernel weights vanished at an evaluation point.

    ``x0`` records the evaluation point so callers can widen the
    bandwidth or skip the grid point.
    """

    def __init__(self, x0, message=None):
        self.x0 = x0
        super().__init__(message or f"no local data at x0={x0!r}")


class DegeneratePredictorError(SivcError):
    """A smoothing coordinate has zero sample variance."""


class UnboundedSyntheticWeightError(SivcError):
    """The estimated censoring survival hits zero inside a response's
    integration range, making the synthetic weight unbounded."""

    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"unbounded synthetic weight at row {row}")


class InsufficientLocalSampleError(SivcError):
    """Fewer than two observations carry weight near a grid point."""


class CalibrationError(SivcError):
    """Censoring calibration could not bracket the target rate."""


class QuadratureError(SivcError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class EstimationError(SivcError):
    """A stage of the model fit failed; the message names the stage."""
