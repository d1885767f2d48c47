"""Monte Carlo calibration of the CUSUM boundary ``C_t = c * f(t)``.

For each replication b a Gaussian random walk of length T is scaled by the
boundary function and its maximum ``m_b`` recorded; the constant c is the
``ceil((1 - alpha) * B)``-th order statistic of the maxima. Replication b always
draws from the counter-based stream ``(seed, b)``, so the result does not depend
on how replications are spread over threads.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .exceptions import InvalidParameterError, NotCalibratedError
from .rng import STREAM_CALIBRATION, STREAM_CROSSING, chunk_ranges, replication_stream
from .validation import (
    INDEFINITE,
    validate_alpha,
    validate_horizon,
    validate_replications,
    validate_seed,
    validate_threads,
)

logger = logging.getLogger(__name__)

DEFAULT_REPLICATIONS = 100_000
DEFAULT_SEED = 20210301
INDEFINITE_PROXY = 1000
DEFAULT_START_YEAR = 2020

# Rows simulated at once inside a worker; bounds memory for long horizons.
_BLOCK_ROWS = 4096


@dataclass(frozen=True)
class BoundaryKind:
    """A boundary function and whether it may be used with an indefinite horizon."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    indefinite_ok: bool


def _sqrt(t: np.ndarray) -> np.ndarray:
    return np.sqrt(t)


def _linear(t: np.ndarray) -> np.ndarray:
    return np.asarray(t, dtype=float)


def _sqrt_log(t: np.ndarray) -> np.ndarray:
    return np.sqrt(t * (1.0 + np.log(t)))


# Kinds flagged indefinite_ok satisfy f(t) / sqrt(t) -> infinity.
BOUNDARY_KINDS: dict[str, BoundaryKind] = {
    "sqrt": BoundaryKind("sqrt", _sqrt, indefinite_ok=False),
    "linear": BoundaryKind("linear", _linear, indefinite_ok=True),
    "sqrt_log": BoundaryKind("sqrt_log", _sqrt_log, indefinite_ok=True),
}


def register_boundary(kind: BoundaryKind) -> None:
    """Add a boundary function kind.

    A kind marked ``indefinite_ok`` must satisfy ``f(t) / sqrt(t) -> inf``.
    """
    BOUNDARY_KINDS[kind.name] = kind


def boundary_kind(name: str) -> BoundaryKind:
    try:
        return BOUNDARY_KINDS[name]
    except KeyError:
        known = ", ".join(sorted(BOUNDARY_KINDS))
        raise InvalidParameterError(f"unknown boundary function '{name}' (known: {known})") from None


@dataclass(frozen=True)
class BoundarySpec:
    """Calibrated boundary for one (T, alpha, f) combination.

    Attributes:
        horizon: Monitoring horizon T in years, or ``math.inf``
        alpha: Nominal overall size
        f_kind: Boundary function name
        c: Calibrated constant, None until calibrated
        replications: Monte Carlo replications B
        seed: Master seed
        simulated_horizon: Walk length used in the simulation (T, or the proxy for T = inf)
    """

    horizon: float
    alpha: float
    f_kind: str = "sqrt"
    c: float | None = None
    replications: int = DEFAULT_REPLICATIONS
    seed: int = DEFAULT_SEED
    simulated_horizon: int = 0

    def __post_init__(self) -> None:
        if self.c is not None and not self.c > 0:
            raise InvalidParameterError(f"boundary constant must be positive, got {self.c}")
        validate_replications(self.replications)

    @property
    def calibrated(self) -> bool:
        return self.c is not None

    @property
    def indefinite(self) -> bool:
        return self.horizon == INDEFINITE

    def values(self, steps: int) -> np.ndarray:
        """Boundary values for t = 1..steps."""
        if self.c is None:
            raise NotCalibratedError("boundary constant has not been calibrated")
        t = np.arange(1, steps + 1, dtype=float)
        return self.c * boundary_kind(self.f_kind).func(t)


def boundary_value(spec: BoundarySpec, t: int) -> float:
    """Critical value ``c * f(t)`` at step t >= 1 since monitoring started.

    Raises:
        NotCalibratedError: If ``spec.c`` is unset
        InvalidParameterError: If t < 1

    """
    if spec.c is None:
        raise NotCalibratedError("boundary constant has not been calibrated")
    if t < 1:
        raise InvalidParameterError(f"monitoring steps start at 1, got {t}", code="NON_POSITIVE_STEP")
    return float(spec.c * boundary_kind(spec.f_kind).func(np.array([float(t)]))[0])


def _check_inputs(horizon: float, alpha: float, f_kind: str, replications: int, seed: int) -> None:
    validate_horizon(horizon)
    validate_alpha(alpha)
    validate_replications(replications)
    validate_seed(seed)
    kind = boundary_kind(f_kind)
    if horizon == INDEFINITE and not kind.indefinite_ok:
        raise InvalidParameterError(
            f"boundary '{f_kind}' does not grow faster than sqrt(t); "
            "it cannot be used with an indefinite horizon",
            code="INVALID_HORIZON",
        )


def _walk_extremes(
    length: int, f_kind: str, rows: range, seed: int, substream: int, sign: float
) -> np.ndarray:
    func = boundary_kind(f_kind).func
    scale = func(np.arange(1, length + 1, dtype=float))
    out = np.empty(len(rows))
    for start in range(0, len(rows), _BLOCK_ROWS):
        block = rows[start : start + _BLOCK_ROWS]
        draws = np.empty((len(block), length))
        for i, b in enumerate(block):
            draws[i] = replication_stream(seed, b, substream).standard_normal(length)
        scaled = sign * np.cumsum(draws, axis=1) / scale
        out[start : start + len(block)] = scaled.max(axis=1)
    return out


def simulate_maxima(
    length: int,
    f_kind: str,
    replications: int,
    seed: int,
    threads: int = 1,
    substream: int = STREAM_CALIBRATION,
    sign: float = 1.0,
) -> np.ndarray:
    """Simulate ``max_t sign * S_t / f(t)`` for ``replications`` Gaussian walks.

    The result is ordered by replication index regardless of ``threads``.
    """
    validate_threads(threads)
    pieces = chunk_ranges(replications, threads)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = executor.map(
            lambda rows: _walk_extremes(length, f_kind, rows, seed, substream, sign), pieces
        )
        return np.concatenate(list(results))


def order_statistic_index(alpha: float, replications: int) -> int:
    """Zero-based index of the ``ceil((1 - alpha) * B)``-th order statistic."""
    # guard against (1 - alpha) * B landing a hair above an integer
    k = math.ceil((1.0 - alpha) * replications - 1e-9)
    return min(max(k, 1), replications) - 1


def quantile_constant(maxima: np.ndarray, alpha: float) -> float:
    """Upper ``1 - alpha`` order-statistic quantile of simulated maxima."""
    index = order_statistic_index(alpha, maxima.size)
    return float(np.partition(maxima, index)[index])


def calibrate(
    horizon: float,
    alpha: float,
    f_kind: str = "sqrt",
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    indefinite_proxy: int = INDEFINITE_PROXY,
) -> BoundarySpec:
    """Calibrate the boundary constant by Monte Carlo.

    Args:
        horizon: Monitoring horizon T, or ``math.inf``
        alpha: Nominal overall size in (0, 0.5]
        f_kind: Boundary function name
        replications: Number of simulated walks B
        seed: Master seed
        threads: Worker threads (does not affect the result)
        indefinite_proxy: Walk length used when T is infinite

    Returns:
        Calibrated BoundarySpec

    Raises:
        InvalidParameterError: For an invalid alpha, horizon, boundary or seed

    """
    _check_inputs(horizon, alpha, f_kind, replications, seed)
    length = indefinite_proxy if horizon == INDEFINITE else int(horizon)
    maxima = simulate_maxima(length, f_kind, replications, seed, threads)
    c = quantile_constant(maxima, alpha)
    logger.info("calibrated c=%.6f for T=%s alpha=%s f=%s B=%d", c, horizon, alpha, f_kind, replications)
    return BoundarySpec(
        horizon=horizon,
        alpha=alpha,
        f_kind=f_kind,
        c=c,
        replications=replications,
        seed=seed,
        simulated_horizon=length,
    )


def calibrate_many(
    horizon: float,
    alphas: Sequence[float],
    f_kind: str = "sqrt",
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    indefinite_proxy: int = INDEFINITE_PROXY,
) -> list[BoundarySpec]:
    """Calibrate several sizes from one set of simulated maxima.

    Each constant is identical to what ``calibrate`` returns for that alpha
    with the same seed.
    """
    for alpha in alphas:
        _check_inputs(horizon, alpha, f_kind, replications, seed)
    length = indefinite_proxy if horizon == INDEFINITE else int(horizon)
    maxima = simulate_maxima(length, f_kind, replications, seed, threads)
    return [
        BoundarySpec(
            horizon=horizon,
            alpha=alpha,
            f_kind=f_kind,
            c=quantile_constant(maxima, alpha),
            replications=replications,
            seed=seed,
            simulated_horizon=length,
        )
        for alpha in alphas
    ]


def critical_value_table(
    horizon: float,
    alphas: Sequence[float],
    horizon_years: int,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED,
    start_year: int = DEFAULT_START_YEAR,
    threads: int = 1,
    specs: Sequence[BoundarySpec] | None = None,
    f_kind: str = "sqrt",
) -> pd.DataFrame:
    """Tabulate ``c * f(t)`` for each alpha (rows) and monitored year (columns).

    Args:
        horizon: Monitoring horizon T used for calibration
        alphas: Sizes to tabulate
        horizon_years: Number of monitored years shown as columns
        replications: Monte Carlo replications
        seed: Master seed
        start_year: Calendar year labeling the first monitored year
        threads: Worker threads
        specs: Pre-calibrated boundaries (skips simulation when given)
        f_kind: Boundary function used when calibrating

    Returns:
        DataFrame indexed by alpha with calendar-year columns

    """
    if horizon_years < 1:
        raise InvalidParameterError(f"need at least one year, got {horizon_years}")
    if specs is None:
        specs = calibrate_many(horizon, alphas, f_kind, replications, seed, threads)
    rows = {spec.alpha: spec.values(horizon_years) for spec in specs}
    columns = [start_year + i for i in range(horizon_years)]
    table = pd.DataFrame.from_dict(rows, orient="index", columns=columns)
    table.index.name = "alpha"
    return table


def crossing_probability(
    spec: BoundarySpec,
    replications: int = DEFAULT_REPLICATIONS,
    seed: int = DEFAULT_SEED + 1,
    threads: int = 1,
) -> float:
    """Fraction of fresh walks with ``S_t <= -C_t`` for some ``t <= T``.

    Uses a stream distinct from calibration so the estimate is out-of-sample.
    """
    if spec.c is None:
        raise NotCalibratedError("boundary constant has not been calibrated")
    length = spec.simulated_horizon or int(spec.horizon)
    minima = simulate_maxima(
        length, spec.f_kind, replications, seed, threads, substream=STREAM_CROSSING, sign=-1.0
    )
    # max of -S_t/f(t) >= c  <=>  S_t <= -c f(t) for some t
    return float(np.mean(minima >= spec.c))


def with_constant(spec: BoundarySpec, c: float) -> BoundarySpec:
    """Return ``spec`` with a known constant, e.g. one read from the cache."""
    return replace(spec, c=c)
