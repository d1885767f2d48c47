"""Carbon-flux vintages and the budget imbalance series.

A vintage is one annual release of the global carbon budget: five (optionally
six) flux series from 1959 up to the release's final year. Later releases may
revise earlier years, so vintages are immutable values and a new release is a
new object.
"""

from __future__ import annotations

import io
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import (
    DataError,
    EmptyDataError,
    MalformedNumberError,
    MissingColumnError,
    NonConsecutiveYearsError,
)

logger = logging.getLogger(__name__)

FIRST_YEAR = 1959
REQUIRED_COLUMNS: tuple[str, ...] = ("year", "e_ff", "e_luc", "g_atm", "s_ocn", "s_lnd")
OPTIONAL_COLUMNS: tuple[str, ...] = ("s_cem",)
FLUX_COLUMNS: tuple[str, ...] = REQUIRED_COLUMNS[1:] + OPTIONAL_COLUMNS


@dataclass(frozen=True)
class FluxRecord:
    """One year of carbon fluxes in GtC/yr."""

    year: int
    e_ff: float
    e_luc: float
    g_atm: float
    s_ocn: float
    s_lnd: float
    s_cem: float = 0.0

    def __post_init__(self) -> None:
        if self.year < FIRST_YEAR:
            raise DataError(f"year {self.year} precedes {FIRST_YEAR}")
        for name in FLUX_COLUMNS:
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"year {self.year}: {name} is not finite")

    @property
    def imbalance(self) -> float:
        """Budget imbalance with the cement-carbonation sink folded into fossil emissions."""
        return (self.e_ff - self.s_cem) + self.e_luc - self.g_atm - self.s_ocn - self.s_lnd


@dataclass(frozen=True)
class Vintage:
    """One release of the flux data set."""

    label: str
    records: tuple[FluxRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        _check_years([r.year for r in self.records])

    def __len__(self) -> int:
        return len(self.records)

    @property
    def years(self) -> list[int]:
        return [r.year for r in self.records]

    @property
    def first_year(self) -> int:
        return self.records[0].year

    @property
    def last_year(self) -> int:
        return self.records[-1].year

    def to_frame(self) -> pd.DataFrame:
        """Return the fluxes as a DataFrame indexed by year."""
        frame = pd.DataFrame(
            [[getattr(r, c) for c in FLUX_COLUMNS] for r in self.records],
            columns=list(FLUX_COLUMNS),
            index=pd.Index(self.years, name="year"),
        )
        return frame


@dataclass(frozen=True, eq=False)
class BudgetImbalanceSeries:
    """Annual budget imbalance values derived from a vintage."""

    label: str
    years: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        if len(self.years) != values.shape[0]:
            raise DataError("years and values differ in length")
        if not np.all(np.isfinite(values)):
            raise DataError(f"{self.label}: budget imbalance contains non-finite values")

    def __len__(self) -> int:
        return len(self.years)

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=pd.Index(self.years, name="year"), name=self.label)


def _check_years(years: Sequence[int]) -> None:
    if not years:
        raise EmptyDataError("vintage has no rows")
    if years[0] != FIRST_YEAR:
        raise NonConsecutiveYearsError(f"first year must be {FIRST_YEAR}, got {years[0]}")
    for previous, current in zip(years[:-1], years[1:], strict=True):
        if current != previous + 1:
            raise NonConsecutiveYearsError(f"year {current} follows {previous}")


def parse_vintage(raw: str | io.TextIOBase, label: str) -> Vintage:
    """Parse a vintage from delimited text.

    Args:
        raw: CSV text (or an open text stream) with header
            ``year,e_ff,e_luc,g_atm,s_ocn,s_lnd[,s_cem]``
        label: Release name, e.g. ``"GCB2020"``

    Returns:
        Vintage with records in file order

    Raises:
        MissingColumnError: If a required column is absent
        EmptyDataError: If the file has no data rows
        MalformedNumberError: If a cell does not parse as a decimal
        NonConsecutiveYearsError: If years are not 1959, 1960, ... without gaps

    """
    text = raw if isinstance(raw, str) else raw.read()
    if not text.strip():
        raise EmptyDataError(f"{label}: no header and no rows")

    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise EmptyDataError(f"{label}: {e}") from e
    except pd.errors.ParserError as e:
        raise DataError(f"{label}: {e}") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    for column in REQUIRED_COLUMNS:
        if column not in frame.columns:
            raise MissingColumnError(column)

    if frame.empty:
        raise EmptyDataError(f"{label}: header present but no rows")

    columns = list(REQUIRED_COLUMNS) + [c for c in OPTIONAL_COLUMNS if c in frame.columns]
    numeric = {}
    for column in columns:
        raw_values = frame[column].str.strip()
        parsed = pd.to_numeric(raw_values, errors="coerce")
        bad = parsed.isna() | ~np.isfinite(parsed.astype(float))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            # header is line 1, first data row is row 1
            raise MalformedNumberError(row + 1, column, raw_values.iloc[row])
        numeric[column] = parsed.astype(float).to_numpy()

    years = numeric["year"]
    if not np.all(years == np.round(years)):
        row = int(np.flatnonzero(years != np.round(years))[0])
        raise MalformedNumberError(row + 1, "year", frame["year"].iloc[row])

    s_cem = numeric.get("s_cem", np.zeros(len(frame)))
    year_list = [int(y) for y in years]
    _check_years(year_list)

    records = tuple(
        FluxRecord(
            year=year_list[i],
            e_ff=float(numeric["e_ff"][i]),
            e_luc=float(numeric["e_luc"][i]),
            g_atm=float(numeric["g_atm"][i]),
            s_ocn=float(numeric["s_ocn"][i]),
            s_lnd=float(numeric["s_lnd"][i]),
            s_cem=float(s_cem[i]),
        )
        for i in range(len(year_list))
    )
    logger.debug("parsed vintage %s: %d-%d", label, year_list[0], year_list[-1])
    return Vintage(label=label, records=records)


def read_vintage(path: Path, label: str | None = None) -> Vintage:
    """Read a vintage CSV file; the label defaults to the file stem."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    return parse_vintage(text, label or Path(path).stem)


def serialize_vintage(vintage: Vintage) -> str:
    """Write a vintage in the CSV exchange format with 17 significant digits.

    The ``s_cem`` column is emitted only when some year has a non-zero value.
    """
    frame = vintage.to_frame()
    if not (frame["s_cem"] != 0.0).any():
        frame = frame.drop(columns="s_cem")
    return frame.to_csv(float_format="%.17g", lineterminator="\n")


def budget_imbalance(vintage: Vintage) -> BudgetImbalanceSeries:
    """Compute the budget imbalance for every year of a vintage.

    Per year the value is ``(e_ff - s_cem) + e_luc - g_atm - s_ocn - s_lnd``.
    """
    return BudgetImbalanceSeries(
        label=vintage.label,
        years=tuple(vintage.years),
        values=np.array([r.imbalance for r in vintage.records], dtype=float),
    )


def imbalance_series(
    values: Iterable[float], label: str, first_year: int = FIRST_YEAR
) -> BudgetImbalanceSeries:
    """Build a budget imbalance series directly from values."""
    array = np.asarray(list(values), dtype=float)
    return BudgetImbalanceSeries(
        label=label, years=tuple(range(first_year, first_year + array.shape[0])), values=array
    )


def revisions(old: Vintage, new: Vintage) -> pd.DataFrame:
    """Tabulate how a newer release revised the years it shares with an older one.

    Returns:
        DataFrame indexed by the overlapping years with one column per flux and
        ``b_im``, each holding ``new - old``

    """
    old_frame = old.to_frame()
    new_frame = new.to_frame()
    old_frame["b_im"] = budget_imbalance(old).values
    new_frame["b_im"] = budget_imbalance(new).values
    overlap = old_frame.index.intersection(new_frame.index)
    return new_frame.loc[overlap] - old_frame.loc[overlap]
