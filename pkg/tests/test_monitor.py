"""Tests for monitor module."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from co2monitor.calibration import BoundarySpec
from co2monitor.exceptions import (
    AlreadyTerminalError,
    GaussianityWarning,
    NotCalibratedError,
    StateFileError,
    WindowMismatchError,
)
from co2monitor.flux_data import imbalance_series, parse_vintage
from co2monitor.monitor import (
    Decision,
    MonitorConfig,
    Status,
    dumps_state,
    init_monitor,
    load_state,
    loads_state,
    save_state,
    status_report,
    step,
    step_series,
    steps_frame,
)

from .helpers import vintage_csv

# AR(1) fit on this window: phi = 0, sigma = sqrt(2/3)
WINDOW = [0.0, 1.0, 0.0, 1.0, 0.0]
SIGMA = math.sqrt(2.0 / 3.0)


def _config(horizon: int = 3, c: float = 1.0, **kwargs) -> MonitorConfig:
    kwargs.setdefault("gaussianity_check", False)
    return MonitorConfig(k=5, boundary=BoundarySpec(horizon, 0.05, c=c), **kwargs)


def _series(*new_values: float, window=WINDOW, first_year: int = 1959):
    return imbalance_series(list(window) + list(new_values), "test", first_year)


class TestMonitorConfig:
    """Tests for MonitorConfig validation."""

    def test_needs_calibrated_boundary(self):
        """Test that a boundary without constant is refused."""
        with pytest.raises(NotCalibratedError):
            MonitorConfig(k=5, boundary=BoundarySpec(30, 0.05))

    def test_window_too_small(self):
        """Test that K must be at least 3."""
        from co2monitor.exceptions import InvalidParameterError

        with pytest.raises(InvalidParameterError):
            MonitorConfig(k=2, boundary=BoundarySpec(30, 0.05, c=1.0))


class TestInitMonitor:
    """Tests for init_monitor function."""

    def test_initial_state(self):
        """Test the state created from the initial window."""
        state = init_monitor(_config(), _series())
        assert state.steps == ()
        assert state.z == 0.0
        assert state.status is Status.RUNNING
        assert state.init_phi == 0.0
        assert state.init_sigma == pytest.approx(SIGMA)
        assert state.expected_length == 6
        assert state.first_year == 1959

    def test_wrong_length(self):
        """Test that the initial vintage must have exactly K values."""
        with pytest.raises(WindowMismatchError):
            init_monitor(_config(), _series(0.3))

    def test_accepts_vintage(self):
        """Test that a Vintage is turned into its budget imbalance."""
        vintage = parse_vintage(vintage_csv([0.1, -0.4, 0.3, 0.2, -0.5]), "v")
        state = init_monitor(_config(), vintage)
        assert state.label == "v"

    def test_gaussianity_warning(self):
        """Test that a failed battery is flagged and warned about."""
        with patch("co2monitor.monitor.gaussianity_passes", return_value=False):
            with pytest.warns(GaussianityWarning):
                state = init_monitor(_config(gaussianity_check=True), _series())
        assert state.init_gauss_flag == "warn"

    def test_gaussianity_off(self):
        """Test that the flag is off when the check is disabled."""
        assert init_monitor(_config(), _series()).init_gauss_flag == "off"


class TestStep:
    """Tests for step and step_series."""

    def test_continue(self):
        """Test a positive innovation keeps the monitor running."""
        state = init_monitor(_config(), _series())
        new_state, decision = step_series(state, _series(0.5))

        assert decision is Decision.CONTINUE
        record = new_state.steps[0]
        assert record.year == 1964
        assert record.n == 6
        assert record.phi_hat == 0.0
        assert record.innovation == pytest.approx(0.5 / SIGMA)
        assert record.z == record.innovation
        assert record.boundary == 1.0
        assert new_state.status is Status.RUNNING

    def test_reject_on_crossing(self):
        """Test that Z <= -C rejects and is terminal."""
        state = init_monitor(_config(), _series())
        state, decision = step_series(state, _series(-1.0))

        assert decision is Decision.REJECT
        assert state.status is Status.REJECTED
        assert state.rejection_year == 1964
        assert state.status_text() == "rejected:1964"
        with pytest.raises(AlreadyTerminalError):
            step_series(state, _series(-1.0, 0.0))

    def test_reject_at_equality(self):
        """Test that touching the boundary exactly rejects."""
        probe = init_monitor(_config(c=10.0), _series())
        probe, _ = step_series(probe, _series(-0.5))
        innovation = probe.steps[0].innovation

        state = init_monitor(_config(c=-innovation), _series())
        _, decision = step_series(state, _series(-0.5))
        assert decision is Decision.REJECT

    def test_horizon_exhausted(self):
        """Test that the monitor stops after T steps without rejection."""
        state = init_monitor(_config(horizon=2), _series())
        state, _ = step_series(state, _series(0.1))
        state, _ = step_series(state, _series(0.1, 0.1))

        assert state.status is Status.HORIZON_EXHAUSTED
        assert state.status_text() == "horizon_exhausted"
        assert state.rejection_year is None
        with pytest.raises(AlreadyTerminalError):
            step_series(state, _series(0.1, 0.1, 0.1))

    def test_immutable_state(self):
        """Test that stepping returns a new state and leaves the old one alone."""
        state = init_monitor(_config(), _series())
        new_state, _ = step_series(state, _series(0.5))
        assert state.steps == ()
        assert len(new_state.steps) == 1

    def test_wrong_length(self):
        """Test that a vintage of the wrong length is refused."""
        state = init_monitor(_config(), _series())
        with pytest.raises(WindowMismatchError):
            step_series(state, _series(0.5, 0.5))

    def test_wrong_start_year(self):
        """Test that a vintage starting in another year is refused."""
        state = init_monitor(_config(), _series())
        with pytest.raises(WindowMismatchError, match="starts in 1960"):
            step_series(state, _series(0.5, first_year=1960))

    def test_innovations_are_frozen(self):
        """Test that revisions to past values leave earlier innovations untouched."""
        state = init_monitor(_config(horizon=5), _series())
        state, _ = step_series(state, _series(0.5))
        first = state.steps[0].innovation

        state, _ = step_series(state, _series(0.9, 0.2))
        assert state.steps[0].innovation == first
        assert state.steps[1].innovation == pytest.approx(0.2 / SIGMA)

    def test_revised_previous_value_enters_innovation(self):
        """Test that the newest innovation uses the vintage's own previous value."""
        state = init_monitor(_config(horizon=5), _series())
        state, _ = step_series(state, _series(0.5))
        revised_window = [0.0, 2.0, 0.0, 2.0, 0.0]
        state, _ = step_series(state, _series(1.0, 0.3, window=revised_window))

        phi = 0.0
        sigma = math.sqrt(8.0 / 3.0)
        assert state.steps[1].sigma_hat == pytest.approx(sigma)
        assert state.steps[1].innovation == pytest.approx((0.3 - phi * 1.0) / sigma)

    def test_z_is_sum_of_innovations(self):
        """Test that Z equals the running sum of stored innovations exactly."""
        state = init_monitor(_config(horizon=10, c=50.0), _series())
        values: list[float] = []
        for v in (0.3, -0.2, 0.7, -0.9, 0.1):
            values.append(v)
            state, _ = step_series(state, _series(*values))
        running = 0.0
        for record in state.steps:
            running += record.innovation
            assert record.z == running

    def test_step_with_vintage(self):
        """Test step on a Vintage object."""
        state = init_monitor(_config(), parse_vintage(vintage_csv(WINDOW), "v"))
        _, decision = step(state, parse_vintage(vintage_csv(WINDOW + [0.5]), "v2"))
        assert decision is Decision.CONTINUE

    def test_arma_null_model(self):
        """Test that a white-noise null model standardizes by the root mean square."""
        config = _config(model_orders=(0, 0))
        state = init_monitor(config, _series())
        state, _ = step_series(state, _series(0.5))
        rms = math.sqrt(np.mean(np.square(WINDOW)))
        assert state.steps[0].sigma_hat == pytest.approx(rms)
        assert state.steps[0].innovation == pytest.approx(0.5 / rms)


class TestStateFile:
    """Tests for the line-oriented state file."""

    def _run(self, *values: float, horizon: int = 5):
        state = init_monitor(_config(horizon=horizon), _series())
        seen: list[float] = []
        for v in values:
            seen.append(v)
            state, _ = step_series(state, _series(*seen))
        return state

    def test_header(self):
        """Test the required header lines."""
        lines = dumps_state(self._run(0.5)).splitlines()
        assert lines[:7] == [
            "version=1",
            "alpha=0.05",
            "T=5",
            "K=5",
            "f=sqrt",
            "c=1",
            "status=running",
        ]
        assert "year,n,phi_hat,sigma_hat,innovation,z,boundary,decision,gauss_flag" in lines

    def test_round_trip(self, tmp_path):
        """Test that a saved state loads with identical steps."""
        state = self._run(0.5, -0.3, 0.2)
        path = tmp_path / "monitor.state"
        save_state(state, path)
        loaded = load_state(path)

        assert loaded.steps == state.steps
        assert loaded.status_text() == state.status_text()
        assert loaded.config.k == 5
        assert loaded.config.boundary.c == 1.0
        assert loaded.first_year == 1959
        assert loaded.init_sigma == state.init_sigma

    def test_replay_equivalence(self, tmp_path):
        """Test that resuming from a file gives the same history as one run."""
        straight = self._run(0.5, -0.3)

        path = tmp_path / "monitor.state"
        save_state(self._run(0.5), path)
        resumed, _ = step_series(load_state(path), _series(0.5, -0.3))
        assert resumed.steps == straight.steps

    def test_rejected_state(self):
        """Test that a rejected monitor stores its detection year."""
        text = dumps_state(self._run(-1.0))
        assert "status=rejected:1964" in text
        assert loads_state(text).status is Status.REJECTED

    def test_tampered_z(self):
        """Test that a Z column inconsistent with the innovations is refused."""
        lines = dumps_state(self._run(0.5)).splitlines()
        fields = lines[-1].split(",")
        fields[5] = "9.5"
        lines[-1] = ",".join(fields)
        with pytest.raises(StateFileError, match="sum of innovations"):
            loads_state("\n".join(lines))

    def test_wrong_status(self):
        """Test that a stored status disagreeing with the steps is refused."""
        text = dumps_state(self._run(0.5)).replace("status=running", "status=rejected:1964")
        with pytest.raises(StateFileError, match="disagrees"):
            loads_state(text)

    def test_wrong_version(self):
        """Test that an unknown format version is refused."""
        text = dumps_state(self._run(0.5)).replace("version=1", "version=2")
        with pytest.raises(StateFileError, match="version"):
            loads_state(text)

    def test_missing_table(self):
        """Test that a file without the step table is refused."""
        with pytest.raises(StateFileError):
            loads_state("version=1\nalpha=0.05\n")

    def test_missing_file(self, tmp_path):
        """Test that an absent file is a state file error."""
        with pytest.raises(StateFileError, match="cannot read"):
            load_state(tmp_path / "nope.state")


class TestStatusReport:
    """Tests for status_report and steps_frame."""

    def test_report(self):
        """Test the summary line and table."""
        state = init_monitor(_config(), _series())
        state, _ = step_series(state, _series(-1.0))
        report = status_report(state)

        assert report.status == "rejected:1964"
        assert report.detection_year == 1964
        assert "status=rejected:1964" in report.summary
        assert list(report.table["year"]) == [1964]
        assert list(steps_frame(state)["decision"]) == ["reject"]

    def test_notes_for_failed_battery(self):
        """Test that failed Gaussianity checks appear in the notes."""
        with patch("co2monitor.monitor.gaussianity_passes", return_value=False):
            with pytest.warns(GaussianityWarning):
                state = init_monitor(_config(gaussianity_check=True), _series())
                state, _ = step_series(state, _series(0.5))
        notes = status_report(state).notes
        assert notes[0] == "initial window: Gaussianity battery failed"
        assert "1964: Gaussianity battery failed" in notes
