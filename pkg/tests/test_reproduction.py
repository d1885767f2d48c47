"""Published figures for the 2020 global carbon budget release.

Every test needs ``tests/data/gcb2020.csv`` (or the file named by
``CO2MONITOR_GCB2020``) and is skipped without it.
Published values are rounded to two decimals, so comparisons allow one unit
in the last place.
"""

import pytest

from co2monitor.arma import bic_select, fit_ar1, fit_arma
from co2monitor.calibration import BoundarySpec
from co2monitor.diagnostics import diagnose
from co2monitor.flux_data import budget_imbalance, read_vintage
from co2monitor.monitor import GAUSS_PASS, MonitorConfig, init_monitor


def _approx(value: float) -> object:
    return pytest.approx(value, abs=0.01)


@pytest.fixture
def imbalance(gcb2020_path):
    return budget_imbalance(read_vintage(gcb2020_path)).values


class TestBudgetImbalanceRow:
    """Diagnostics of the budget imbalance itself."""

    def test_moments(self, imbalance):
        """Test n, mean, std, skewness and kurtosis."""
        report = diagnose(imbalance)
        assert report.n == 61
        assert report.mean == _approx(-0.01)
        assert report.std == _approx(0.77)
        assert report.skew == _approx(-0.20)
        assert report.kurt == _approx(3.40)

    def test_statistics(self, imbalance):
        """Test the Gaussianity and autocorrelation statistics."""
        report = diagnose(imbalance)
        assert report.jb == _approx(0.80)
        assert report.ks == _approx(0.12)
        assert report.ad == _approx(0.30)
        assert report.dw == _approx(1.29)
        assert report.q[1] == _approx(7.70)
        assert report.q[5] == _approx(9.61)
        assert report.gaussianity_passes

    def test_ar1_fit(self, imbalance):
        """Test the AR(1) parameter estimates."""
        fit = fit_ar1(imbalance)
        assert fit.phi == _approx(0.35)
        assert fit.sigma == _approx(0.72)


class TestResidualRow:
    """Diagnostics of the standardized AR(1) residuals."""

    def test_statistics(self, imbalance):
        """Test the residual row of the diagnostics table."""
        report = diagnose(fit_ar1(imbalance).residuals)
        assert report.mean == _approx(0.20)
        assert report.std == _approx(1.00)
        assert report.skew == _approx(0.21)
        assert report.kurt == _approx(2.80)
        assert report.jb == _approx(0.54)
        assert report.ks == _approx(0.07)
        assert report.ad == _approx(0.35)
        assert report.dw == _approx(2.03)
        assert report.q[1] == _approx(0.03)
        assert report.q[5] == _approx(1.67)

    def test_no_remaining_autocorrelation(self, imbalance):
        """Test that an AR(1) refit on the residuals finds almost nothing."""
        refit = fit_ar1(fit_ar1(imbalance).residuals)
        assert abs(refit.phi) < 0.1
        assert refit.phi == _approx(-0.02)


class TestModelSelection:
    """ARMA fitting and BIC selection on the 2020 release."""

    def test_css_matches_ols(self, imbalance):
        """Test that the conditional-sum-of-squares AR(1) agrees with OLS."""
        fit = fit_arma(imbalance, 1, 0)
        assert fit.phi[0] == pytest.approx(0.35, abs=0.02)

    def test_bic_selects_ar1(self, imbalance):
        """Test that BIC over a 3x3 grid selects AR(1)."""
        assert bic_select(imbalance, 3, 3) == (1, 0)


class TestMonitorStart:
    """Starting a monitor on the data up to 2019."""

    def test_initial_refit(self, gcb2020_path):
        """Test the stored refit and Gaussianity flag for K = 61."""
        config = MonitorConfig(k=61, boundary=BoundarySpec(30, 0.05, c=2.45))
        state = init_monitor(config, read_vintage(gcb2020_path))
        assert state.init_phi == _approx(0.35)
        assert state.init_sigma == _approx(0.72)
        assert state.init_gauss_flag == GAUSS_PASS
        assert state.expected_length == 62
