"""Data builders shared by the test modules."""

import numpy as np

from co2monitor.flux_data import FIRST_YEAR

# Constant fluxes whose budget imbalance is zero; e_ff carries the signal.
_BASE = {"e_luc": 1.0, "g_atm": 4.0, "s_ocn": 2.5, "s_lnd": 2.5}


def vintage_csv(imbalance, first_year: int = FIRST_YEAR) -> str:
    """CSV text of a vintage whose budget imbalance equals ``imbalance`` (up to rounding)."""
    lines = ["year,e_ff,e_luc,g_atm,s_ocn,s_lnd"]
    for offset, value in enumerate(imbalance):
        e_ff = 8.0 + float(value)
        lines.append(
            f"{first_year + offset},{e_ff!r},{_BASE['e_luc']},{_BASE['g_atm']},"
            f"{_BASE['s_ocn']},{_BASE['s_lnd']}"
        )
    return "\n".join(lines) + "\n"


def ar1_path(phi: float, sigma: float, n: int, seed: int = 7) -> np.ndarray:
    """Simple AR(1) path for tests that need realistic data."""
    rng = np.random.default_rng(seed)
    y = np.empty(n)
    y[0] = rng.normal(0.0, sigma / np.sqrt(1.0 - phi**2))
    for t in range(1, n):
        y[t] = phi * y[t - 1] + sigma * rng.normal()
    return y
