"""Descriptive statistics and residual diagnostics for budget imbalance series.

The battery is: Jarque-Bera (N), Kolmogorov-Smirnov (KS) and Anderson-Darling
(AD) against a standard normal after standardizing with the sample mean and
standard deviation, Durbin-Watson (DW) and Ljung-Box Q(m). Decisions use fixed
5% critical values, configurable through ``CriticalValues``.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from scipy import stats

from .exceptions import (
    DegenerateSeriesError,
    LagTooLargeError,
    NumericalUnderflowWarning,
    TooFewObservationsError,
)

logger = logging.getLogger(__name__)

# Smallest CDF distance from 0 or 1 kept in the Anderson-Darling logs.
CDF_FLOOR = 1e-300

STAT_COLUMNS = ["n", "Mean", "Std", "Skew", "Kurt", "phi", "sigma", "N", "KS", "AD", "DW"]
DEFAULT_LAGS = (1, 5)
TABLE_COLUMNS = STAT_COLUMNS + [f"Q({lag})" for lag in DEFAULT_LAGS]


@dataclass(frozen=True)
class CriticalValues:
    """5% critical values used for the accept/reject decisions."""

    jb: float = 5.99
    ks: float = 0.18
    ad: float = 0.74
    q: Mapping[int, float] = field(default_factory=lambda: {1: 3.84, 5: 11.07})

    def q_for(self, lag: int) -> float:
        """Critical value for Q(lag); lags without a configured value use the chi-square quantile."""
        if lag in self.q:
            return float(self.q[lag])
        return float(stats.chi2.ppf(0.95, lag))


@dataclass
class DiagnosticsReport:
    """Summary statistics and diagnostic test statistics for one series.

    Attributes:
        n: Sample size
        mean: Sample mean
        std: Sample standard deviation (divisor n - 1)
        skew: Moment skewness
        kurt: Moment kurtosis (3 for a Gaussian)
        jb: Jarque-Bera statistic
        ks: Kolmogorov-Smirnov distance to the standard normal
        ad: Anderson-Darling statistic
        dw: Durbin-Watson statistic
        q: Ljung-Box statistic per lag
        decisions: Per-test rejection at 5% (True means reject)
    """

    n: int
    mean: float
    std: float
    skew: float
    kurt: float
    jb: float
    ks: float
    ad: float
    dw: float
    q: dict[int, float] = field(default_factory=dict)
    decisions: dict[str, bool] = field(default_factory=dict)

    @property
    def gaussianity_passes(self) -> bool:
        return gaussianity_passes(self)


def _as_array(x: ArrayLike) -> np.ndarray:
    array = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(array)):
        raise DegenerateSeriesError("series contains non-finite values")
    return array


def _central_moments(x: np.ndarray) -> tuple[float, float, float]:
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    m3 = float(np.mean(centered**3))
    m4 = float(np.mean(centered**4))
    return m2, m3, m4


def descriptive_stats(x: ArrayLike, *, moments: bool = True) -> tuple[float, float, float, float]:
    """Compute mean, standard deviation, skewness and kurtosis.

    The standard deviation uses divisor n - 1; skewness and kurtosis are the
    biased moment estimators ``m3 / m2**1.5`` and ``m4 / m2**2``.

    Args:
        x: Numeric series
        moments: Compute skewness and kurtosis (NaN is returned otherwise)

    Returns:
        Tuple ``(mean, std, skew, kurt)``

    Raises:
        TooFewObservationsError: If fewer than two observations are given
        DegenerateSeriesError: If the series is constant and moments are requested

    """
    array = _as_array(x)
    if array.size < 2:
        raise TooFewObservationsError(f"need at least 2 observations, got {array.size}")

    mean = float(array.mean())
    std = float(array.std(ddof=1))
    if not moments:
        return mean, std, float("nan"), float("nan")

    m2, m3, m4 = _central_moments(array)
    if m2 <= 0.0:
        raise DegenerateSeriesError("constant series has no skewness or kurtosis")
    return mean, std, m3 / m2**1.5, m4 / m2**2


def jarque_bera(x: ArrayLike) -> float:
    """Jarque-Bera statistic ``n/6 * (S**2 + (K - 3)**2 / 4)`` from moment skewness and kurtosis."""
    array = _as_array(x)
    _, _, skew, kurt = descriptive_stats(array)
    return array.size / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)


def _standardize(x: ArrayLike) -> np.ndarray:
    array = _as_array(x)
    if array.size < 2:
        raise DegenerateSeriesError("cannot standardize fewer than 2 observations")
    std = array.std(ddof=1)
    if std <= 0.0:
        raise DegenerateSeriesError("cannot standardize a constant series")
    return np.sort((array - array.mean()) / std)


def ks_gaussian(x: ArrayLike) -> float:
    """Kolmogorov-Smirnov distance between the standardized sample and N(0, 1).

    ``D = max_i max(|i/n - Phi(z_(i))|, |(i-1)/n - Phi(z_(i))|)`` over the
    sorted standardized sample.
    """
    z = _standardize(x)
    n = z.size
    cdf = stats.norm.cdf(z)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - cdf), np.abs((i - 1) / n - cdf))))


def anderson_darling(x: ArrayLike) -> float:
    """Anderson-Darling statistic of the standardized sample against N(0, 1).

    CDF values closer than ``CDF_FLOOR`` to 0 or 1 are clamped with a
    ``NumericalUnderflowWarning``.
    """
    z = _standardize(x)
    n = z.size
    lower = stats.norm.cdf(z)
    upper = stats.norm.sf(z)  # 1 - Phi(z) without cancellation
    if np.any(lower < CDF_FLOOR) or np.any(upper < CDF_FLOOR):
        warnings.warn(
            "normal CDF indistinguishable from 0 or 1; clamped for Anderson-Darling",
            NumericalUnderflowWarning,
            stacklevel=2,
        )
        lower = np.clip(lower, CDF_FLOOR, None)
        upper = np.clip(upper, CDF_FLOOR, None)

    i = np.arange(1, n + 1)
    total = np.sum((2 * i - 1) * (np.log(lower) + np.log(upper[::-1])))
    return float(-n - total / n)


def durbin_watson(x: ArrayLike) -> float:
    """Durbin-Watson statistic ``sum(diff(x)**2) / sum(x**2)`` (no demeaning)."""
    array = _as_array(x)
    if array.size < 2:
        raise TooFewObservationsError(f"need at least 2 observations, got {array.size}")
    denominator = float(np.dot(array, array))
    if denominator <= 0.0:
        raise DegenerateSeriesError("Durbin-Watson undefined for an all-zero series")
    diff = np.diff(array)
    return float(np.dot(diff, diff)) / denominator


def autocorrelations(x: ArrayLike, max_lag: int) -> np.ndarray:
    """Sample autocorrelations about the sample mean for lags 1..max_lag."""
    array = _as_array(x)
    centered = array - array.mean()
    denominator = float(np.dot(centered, centered))
    if denominator <= 0.0:
        raise DegenerateSeriesError("autocorrelation undefined for a constant series")
    return np.array(
        [np.dot(centered[k:], centered[:-k]) / denominator for k in range(1, max_lag + 1)]
    )


def ljung_box(x: ArrayLike, m: int) -> float:
    """Ljung-Box ``Q(m) = n(n+2) * sum_k rho_k**2 / (n - k)``.

    Raises:
        LagTooLargeError: Unless ``n > m >= 1``
        DegenerateSeriesError: If the series is constant

    """
    array = _as_array(x)
    n = array.size
    if m < 1 or m >= n:
        raise LagTooLargeError(f"lag {m} requires 1 <= m < n = {n}")
    rho = autocorrelations(array, m)
    k = np.arange(1, m + 1)
    return float(n * (n + 2) * np.sum(rho**2 / (n - k)))


def diagnose(
    x: ArrayLike,
    lags: Sequence[int] = DEFAULT_LAGS,
    critical: CriticalValues | None = None,
) -> DiagnosticsReport:
    """Run the full diagnostics battery on one series.

    Durbin-Watson is reported without a decision: its critical values depend on
    the design and there is no fixed 5% bound to compare against. Ljung-Box lags
    not smaller than the series length are left out of ``q`` and logged.

    Args:
        x: Series to analyze
        lags: Ljung-Box lags to report
        critical: Critical values for the decisions; defaults to the 5% values

    Returns:
        DiagnosticsReport with statistics and decisions

    """
    critical = critical or CriticalValues()
    array = _as_array(x)
    for lag in lags:
        if lag >= array.size:
            logger.debug("skipping Ljung-Box lag %d: series has only %d observations", lag, array.size)
    mean, std, skew, kurt = descriptive_stats(array)
    report = DiagnosticsReport(
        n=int(array.size),
        mean=mean,
        std=std,
        skew=skew,
        kurt=kurt,
        jb=jarque_bera(array),
        ks=ks_gaussian(array),
        ad=anderson_darling(array),
        dw=durbin_watson(array),
        q={lag: ljung_box(array, lag) for lag in lags if lag < array.size},
    )
    report.decisions = {
        "jb": report.jb > critical.jb,
        "ks": report.ks > critical.ks,
        "ad": report.ad > critical.ad,
    }
    for lag, value in report.q.items():
        report.decisions[f"q{lag}"] = value > critical.q_for(lag)
    logger.debug("diagnostics n=%d jb=%.3f ks=%.3f ad=%.3f", report.n, report.jb, report.ks, report.ad)
    return report


def gaussianity_passes(report: DiagnosticsReport) -> bool:
    """True when none of the Jarque-Bera, KS and AD tests reject Gaussianity."""
    return not any(report.decisions.get(name, False) for name in ("jb", "ks", "ad"))


def _row(report: DiagnosticsReport, phi: float, sigma: float, lags: Sequence[int]) -> dict[str, float]:
    row = {
        "n": report.n,
        "Mean": report.mean,
        "Std": report.std,
        "Skew": report.skew,
        "Kurt": report.kurt,
        "phi": phi,
        "sigma": sigma,
        "N": report.jb,
        "KS": report.ks,
        "AD": report.ad,
        "DW": report.dw,
    }
    row.update({f"Q({lag})": report.q.get(lag, float("nan")) for lag in lags})
    return row


def imbalance_table(
    label: str,
    values: ArrayLike,
    critical: CriticalValues | None = None,
    lags: Sequence[int] = DEFAULT_LAGS,
) -> pd.DataFrame:
    """Build the two summary rows for one vintage.

    The first row describes the budget imbalance itself together with its AR(1)
    fit; the second describes the standardized AR(1) residuals, with the AR(1)
    refit on those residuals in the phi/sigma columns.

    Returns:
        DataFrame indexed by ``(label, series)`` with ``STAT_COLUMNS`` and one
        ``Q(lag)`` column per lag

    """
    from .arma import fit_ar1

    y = _as_array(values)
    fit = fit_ar1(y)
    refit = fit_ar1(fit.residuals)
    rows = [
        _row(diagnose(y, lags, critical), fit.phi, fit.sigma, lags),
        _row(diagnose(fit.residuals, lags, critical), refit.phi, refit.sigma, lags),
    ]
    index = pd.MultiIndex.from_tuples(
        [(label, "budget imbalance"), (label, "AR(1) residuals")], names=["vintage", "series"]
    )
    columns = STAT_COLUMNS + [f"Q({lag})" for lag in lags]
    return pd.DataFrame(rows, index=index, columns=columns)
