"""Custom exceptions and warnings for co2monitor."""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REJECT = 3
EXIT_DATA = 4
EXIT_NUMERICAL = 5


class CO2MonitorError(Exception):
    """Base exception for co2monitor operations."""

    code = "ERROR"
    exit_code = EXIT_DATA

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code

    def one_line(self) -> str:
        """Render as the machine-parsable ``error: CODE: detail`` line."""
        detail = " ".join(str(self).split())
        return f"error: {self.code}: {detail}"


class DataError(CO2MonitorError):
    """Invalid input data or parameters."""

    code = "DATA_ERROR"


class MissingColumnError(DataError):
    """A required column is absent from a vintage file."""

    code = "MISSING_COLUMN"

    def __init__(self, column: str) -> None:
        super().__init__(f"required column '{column}' not found in header")
        self.column = column


class NonConsecutiveYearsError(DataError):
    """Vintage years are not strictly consecutive."""

    code = "NON_CONSECUTIVE_YEARS"


class EmptyDataError(DataError):
    """A vintage file has a header but no rows."""

    code = "EMPTY_DATA"


class MalformedNumberError(DataError):
    """A cell does not parse as a decimal number."""

    code = "MALFORMED_NUMBER"

    def __init__(self, row: int, column: str, value: str) -> None:
        super().__init__(f"row {row}, column '{column}': cannot parse {value!r} as a number")
        self.row = row
        self.column = column
        self.value = value


class TooFewObservationsError(DataError):
    """The series is too short for the requested computation."""

    code = "TOO_FEW_OBSERVATIONS"


class WindowMismatchError(DataError):
    """A vintage length does not match the monitor's expectation."""

    code = "WINDOW_MISMATCH"


class LagTooLargeError(DataError):
    """Requested autocorrelation lag is not below the sample size."""

    code = "LAG_TOO_LARGE"


class InvalidParameterError(DataError):
    """A numeric parameter is outside its admissible range."""

    code = "INVALID_PARAMETER"


class StateFileError(DataError):
    """A monitor state file cannot be read or is inconsistent."""

    code = "STATE_FILE"


class ConfigurationError(DataError):
    """Error in configuration file or settings."""

    code = "CONFIGURATION"


class NumericalError(CO2MonitorError):
    """A computation broke down numerically."""

    code = "NUMERICAL_ERROR"
    exit_code = EXIT_NUMERICAL


class DegenerateSeriesError(NumericalError):
    """The series has zero dispersion where a positive one is required."""

    code = "DEGENERATE_SERIES"


class DegenerateRegressorError(NumericalError):
    """The lagged regressor has zero sum of squares."""

    code = "DEGENERATE_REGRESSOR"


class DegenerateFitError(NumericalError):
    """The fitted innovation standard deviation is zero."""

    code = "DEGENERATE_FIT"


class NonConvergenceError(NumericalError):
    """The likelihood optimizer did not converge."""

    code = "NON_CONVERGENCE"

    def __init__(self, message: str, iterations: int, objective: float) -> None:
        super().__init__(f"{message} (iterations={iterations}, objective={objective:.6g})")
        self.iterations = iterations
        self.objective = objective


class MonitorError(CO2MonitorError):
    """The monitoring protocol was violated."""

    code = "MONITOR_ERROR"


class NotCalibratedError(MonitorError):
    """A boundary was used before its constant was calibrated."""

    code = "NOT_CALIBRATED"


class AlreadyTerminalError(MonitorError):
    """A step was requested on a monitor that already stopped."""

    code = "ALREADY_TERMINAL"


class StationarityWarning(UserWarning):
    """Estimated autoregressive coefficient lies outside (-1, 1)."""


class NumericalUnderflowWarning(UserWarning):
    """A normal CDF value had to be clamped away from 0 or 1."""


class GaussianityWarning(UserWarning):
    """Standardized residuals fail the Gaussianity battery."""
