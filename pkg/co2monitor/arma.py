"""Zero-mean null models for the budget imbalance.

The operative model is a stationary AR(1) estimated by OLS without intercept.
General ARMA(p, q) models are estimated by conditional sum of squares with
pre-sample observations and innovations set to zero, and orders are chosen by
BIC over a grid.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize, signal

from .exceptions import (
    DegenerateFitError,
    DegenerateRegressorError,
    InvalidParameterError,
    NonConvergenceError,
    StationarityWarning,
    TooFewObservationsError,
)

logger = logging.getLogger(__name__)

COEFFICIENT_BOUND = 0.999


@dataclass(frozen=True, eq=False)
class Ar1Fit:
    """OLS estimate of ``y_t = phi * y_{t-1} + sigma * e_t``.

    Attributes:
        phi: Autoregressive coefficient
        sigma: Innovation standard deviation (divisor n - 2)
        residuals: Standardized residuals for t = 2..n
        n_fit: Number of observations used
    """

    phi: float
    sigma: float
    residuals: np.ndarray = field(repr=False)
    n_fit: int

    @property
    def stationary(self) -> bool:
        return abs(self.phi) < 1.0

    def innovation(self, current: float, previous: float) -> float:
        """Standardized one-step residual of ``current`` given ``previous``."""
        return (current - self.phi * previous) / self.sigma


@dataclass(frozen=True, eq=False)
class ArmaFit:
    """Conditional-sum-of-squares ARMA(p, q) estimate.

    Attributes:
        p: Autoregressive order
        q: Moving-average order
        phi: AR coefficients phi_1..phi_p
        psi: MA coefficients psi_1..psi_q
        sigma: Innovation standard deviation (divisor n)
        loglik: Gaussian conditional log-likelihood
        bic: ``k * ln(n) - 2 * loglik`` with ``k = p + q + 1``
        n_fit: Number of observations used
        iterations: Optimizer iterations (0 for the closed-form q = 0 case)
    """

    p: int
    q: int
    phi: np.ndarray
    psi: np.ndarray
    sigma: float
    loglik: float
    bic: float
    n_fit: int
    iterations: int = 0


def _as_series(y: ArrayLike) -> np.ndarray:
    return np.asarray(y, dtype=float).ravel()


def fit_ar1(y: ArrayLike) -> Ar1Fit:
    """Fit a zero-mean AR(1) by OLS of y_t on y_{t-1}.

    Args:
        y: Series of at least three observations

    Returns:
        Ar1Fit with phi, sigma and standardized residuals

    Raises:
        TooFewObservationsError: If fewer than three observations are given
        DegenerateRegressorError: If the lagged values are all zero
        DegenerateFitError: If the residuals are all zero

    """
    series = _as_series(y)
    n = series.size
    if n < 3:
        raise TooFewObservationsError(f"AR(1) needs at least 3 observations, got {n}")

    lagged = series[:-1]
    current = series[1:]
    denominator = float(np.dot(lagged, lagged))
    if denominator <= 0.0:
        raise DegenerateRegressorError("lagged regressor has zero sum of squares")

    phi = float(np.dot(current, lagged)) / denominator
    raw = current - phi * lagged
    sigma = math.sqrt(float(np.dot(raw, raw)) / (n - 2))
    if not sigma > 0.0:
        raise DegenerateFitError("AR(1) residuals are identically zero")

    if abs(phi) >= 1.0:
        warnings.warn(
            f"estimated phi={phi:.4f} is outside (-1, 1); stationarity assumption breached",
            StationarityWarning,
            stacklevel=2,
        )

    residuals = raw / sigma
    residuals.setflags(write=False)
    return Ar1Fit(phi=phi, sigma=sigma, residuals=residuals, n_fit=n)


def standardized_residuals(fit: Ar1Fit) -> np.ndarray:
    """Return the standardized residuals ``(y_t - phi*y_{t-1}) / sigma`` for t = 2..n."""
    return fit.residuals


def _css_residuals(y: np.ndarray, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # e_t + sum psi_j e_{t-j} = y_t - sum phi_i y_{t-i}, zero pre-sample
    return signal.lfilter(np.r_[1.0, -phi], np.r_[1.0, psi], y)


def arma_residuals(fit: ArmaFit, y: ArrayLike) -> np.ndarray:
    """Raw CSS residuals of a fitted ARMA model on any series."""
    return _css_residuals(_as_series(y), fit.phi, fit.psi)


def _finish(
    y: np.ndarray, p: int, q: int, phi: np.ndarray, psi: np.ndarray, iterations: int
) -> ArmaFit:
    n = y.size
    resid = _css_residuals(y, phi, psi)
    sse = float(np.dot(resid, resid))
    sigma = math.sqrt(sse / n)
    if not sigma > 0.0:
        raise DegenerateFitError(f"ARMA({p},{q}) residuals are identically zero")
    loglik = -0.5 * n * (math.log(2.0 * math.pi * sigma**2) + 1.0)
    k = p + q + 1
    return ArmaFit(
        p=p,
        q=q,
        phi=phi,
        psi=psi,
        sigma=sigma,
        loglik=loglik,
        bic=k * math.log(n) - 2.0 * loglik,
        n_fit=n,
        iterations=iterations,
    )


def _lag_matrix(y: np.ndarray, p: int) -> np.ndarray:
    n = y.size
    columns = [np.r_[np.zeros(i), y[: n - i]] for i in range(1, p + 1)]
    return np.column_stack(columns) if columns else np.empty((n, 0))


def fit_arma(y: ArrayLike, p: int, q: int) -> ArmaFit:
    """Fit a zero-mean ARMA(p, q) by conditional sum of squares.

    Pure AR models are solved in closed form by least squares; models with a
    moving-average part are optimized with L-BFGS-B starting from the AR
    least-squares solution, coefficients bounded inside (-1, 1).

    Args:
        y: Series with at least ``p + q + 3`` observations
        p: Autoregressive order
        q: Moving-average order

    Returns:
        ArmaFit

    Raises:
        TooFewObservationsError: If the series is too short for the orders
        NonConvergenceError: If the optimizer reports failure

    """
    series = _as_series(y)
    n = series.size
    if p < 0 or q < 0:
        raise InvalidParameterError(f"ARMA orders must be non-negative, got ({p},{q})")
    if n < p + q + 3:
        raise TooFewObservationsError(f"ARMA({p},{q}) needs at least {p + q + 3} observations, got {n}")

    lags = _lag_matrix(series, p)
    if p:
        ar_start, *_ = np.linalg.lstsq(lags, series, rcond=None)
    else:
        ar_start = np.empty(0)

    if q == 0:
        return _finish(series, p, 0, np.asarray(ar_start, dtype=float), np.empty(0), 0)

    def objective(theta: np.ndarray) -> float:
        resid = _css_residuals(series, theta[:p], theta[p:])
        return float(np.dot(resid, resid))

    start = np.r_[np.clip(ar_start, -0.9, 0.9), np.zeros(q)]
    result = optimize.minimize(
        objective,
        start,
        method="L-BFGS-B",
        bounds=[(-COEFFICIENT_BOUND, COEFFICIENT_BOUND)] * (p + q),
    )
    if not result.success:
        raise NonConvergenceError(
            f"ARMA({p},{q}) CSS optimization failed: {result.message}",
            iterations=int(result.nit),
            objective=float(result.fun),
        )
    theta = np.asarray(result.x, dtype=float)
    return _finish(series, p, q, theta[:p].copy(), theta[p:].copy(), int(result.nit))


def bic_select(y: ArrayLike, p_max: int, q_max: int, max_workers: int = 1) -> tuple[int, int]:
    """Select ARMA orders by BIC over ``0..p_max x 0..q_max``.

    Ties are broken by smaller ``p + q`` and then smaller ``q``. Cells whose
    optimization fails are skipped with a warning.

    Args:
        y: Series to model
        p_max: Largest autoregressive order
        q_max: Largest moving-average order
        max_workers: Threads used to fit grid cells

    Returns:
        The selected ``(p, q)``

    """
    if p_max < 0 or q_max < 0:
        raise InvalidParameterError("p_max and q_max must be non-negative")
    series = _as_series(y)
    grid = [(p, q) for p in range(p_max + 1) for q in range(q_max + 1)]

    def fit_cell(order: tuple[int, int]) -> ArmaFit | None:
        try:
            return fit_arma(series, *order)
        except NonConvergenceError as e:
            warnings.warn(f"skipping ARMA{order}: {e}", RuntimeWarning, stacklevel=2)
            return None

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        fits = list(executor.map(fit_cell, grid))

    candidates = [f for f in fits if f is not None]
    if not candidates:
        raise NonConvergenceError("no ARMA order converged", iterations=0, objective=float("nan"))

    best = min(candidates, key=lambda f: (f.bic, f.p + f.q, f.q))
    logger.debug("BIC selected ARMA(%d,%d) bic=%.3f", best.p, best.q, best.bic)
    return best.p, best.q


def simulate_arma(
    phi: ArrayLike,
    psi: ArrayLike,
    sigma: float,
    length: int,
    stream: np.random.Generator,
    burn_in: int = 200,
) -> np.ndarray:
    """Simulate a zero-mean ARMA path, discarding ``burn_in`` leading values."""
    ar = np.asarray(phi, dtype=float)
    ma = np.asarray(psi, dtype=float)
    noise = sigma * stream.standard_normal(length + burn_in)
    path = signal.lfilter(np.r_[1.0, ma], np.r_[1.0, -ar], noise)
    return path[burn_in:]
