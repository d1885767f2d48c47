"""Input validation for monitoring and simulation parameters."""

import math

from .exceptions import InvalidParameterError

INDEFINITE = math.inf


def validate_alpha(alpha: float) -> None:
    """Validate a nominal overall size.

    Args:
        alpha: Significance level of the sequential test

    Raises:
        InvalidParameterError: If alpha is outside (0, 0.5]

    """
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
        raise InvalidParameterError("alpha must be a number", code="INVALID_ALPHA")

    if not (0.0 < alpha <= 0.5):
        raise InvalidParameterError(f"alpha must lie in (0, 0.5], got {alpha}", code="INVALID_ALPHA")


def validate_horizon(horizon: float) -> None:
    """Validate a monitoring horizon.

    Args:
        horizon: Number of monitored years, or ``math.inf`` for an indefinite horizon

    Raises:
        InvalidParameterError: If the horizon is not a positive integer or infinity

    """
    if horizon == INDEFINITE:
        return

    if isinstance(horizon, bool) or not float(horizon).is_integer():
        raise InvalidParameterError(
            f"horizon must be a whole number of years, got {horizon}", code="INVALID_HORIZON"
        )

    if horizon < 1:
        raise InvalidParameterError(f"horizon must be at least 1, got {horizon}", code="INVALID_HORIZON")


def validate_fraction(value: float, name: str, *, upper_open: bool = False) -> None:
    """Validate a fraction such as the abatement rate or misreporting parameter.

    Args:
        value: The fraction to check
        name: Parameter name used in the error message
        upper_open: Reject 1 itself when True

    Raises:
        InvalidParameterError: If the value is outside [0, 1] (or [0, 1))

    """
    upper_ok = value < 1.0 if upper_open else value <= 1.0
    if not (math.isfinite(value) and value >= 0.0 and upper_ok):
        bracket = ")" if upper_open else "]"
        raise InvalidParameterError(
            f"{name} must lie in [0, 1{bracket}, got {value}", code="INVALID_FRACTION"
        )


def validate_replications(count: int) -> None:
    """Validate a Monte Carlo replication count.

    Args:
        count: Number of replications

    Raises:
        InvalidParameterError: If count is not a positive integer

    """
    if not isinstance(count, int) or isinstance(count, bool):
        raise InvalidParameterError("replication count must be an integer")

    if count < 1:
        raise InvalidParameterError(f"replication count must be at least 1, got {count}")


def validate_window(k: int) -> None:
    """Validate the initial-window length.

    Args:
        k: Number of break-free observations used for estimation

    Raises:
        InvalidParameterError: If k is smaller than 3

    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 3:
        raise InvalidParameterError(f"initial window K must be an integer >= 3, got {k}")


def validate_seed(seed: int) -> None:
    """Validate a master RNG seed.

    Args:
        seed: Non-negative integer seed

    Raises:
        InvalidParameterError: If the seed is negative or not an integer

    """
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InvalidParameterError(f"seed must be a non-negative integer, got {seed}")

    if seed >= 2**128:
        raise InvalidParameterError("seed must be below 2**128")


def validate_threads(threads: int) -> None:
    """Validate a worker count.

    Args:
        threads: Maximum number of worker threads

    Raises:
        InvalidParameterError: If threads is outside [1, 256]

    """
    if not isinstance(threads, int) or isinstance(threads, bool):
        raise InvalidParameterError("threads must be an integer")

    if threads < 1 or threads > 256:
        raise InvalidParameterError(f"threads must be between 1 and 256, got {threads}")


def validate_sigma(sigma: float, *, allow_zero: bool = False) -> None:
    """Validate an innovation standard deviation.

    Args:
        sigma: Standard deviation of the driving noise
        allow_zero: Accept a degenerate zero value

    Raises:
        InvalidParameterError: If sigma is negative, zero (unless allowed) or not finite

    """
    if not math.isfinite(sigma) or sigma < 0 or (sigma == 0 and not allow_zero):
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")


def validate_stationary(phi: float) -> None:
    """Validate an AR(1) coefficient for simulation.

    Args:
        phi: Autoregressive coefficient

    Raises:
        InvalidParameterError: If |phi| >= 1

    """
    if not (math.isfinite(phi) and abs(phi) < 1.0):
        raise InvalidParameterError(
            f"phi must lie in (-1, 1) for a stationary process, got {phi}",
            code="NON_STATIONARY_PARAMETER",
        )
