"""Calendar-indexed series and the preprocessing transforms.

Dates are plain :class:`datetime.date` values at the API surface and
``datetime64[D]`` internally. Monthly observations sit on day 1 of their
month; the daily grid is every calendar day. Missing values are NaN.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DivisionByZero,
    FormatError,
    FrequencyMismatch,
    InsufficientData,
    InsufficientHistory,
    MissingObservation,
    ValidationError,
)

DAY = np.timedelta64(1, "D")


class Frequency(str, enum.Enum):
    DAILY = "daily"
    MONTHLY = "monthly"

    @classmethod
    def parse(cls, value: "str | Frequency") -> "Frequency":
        if isinstance(value, Frequency):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown frequency {value!r}; expected 'daily' or 'monthly'") from None


def to_date(value) -> dt.date:
    """Coerce an ISO string, ``datetime64`` or ``date`` to ``datetime.date``."""
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").item()
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value.strip())
        except ValueError:
            raise ValidationError(f"invalid ISO date {value!r}") from None
    raise TypeError(f"cannot interpret {value!r} as a date")


def month_start(d: dt.date) -> dt.date:
    return d.replace(day=1)


def add_months(d: dt.date, n: int) -> dt.date:
    """First day of the month ``n`` months after the month containing ``d``."""
    idx = d.year * 12 + (d.month - 1) + n
    return dt.date(idx // 12, idx % 12 + 1, 1)


def month_end(d: dt.date) -> dt.date:
    return add_months(d, 1) - dt.timedelta(days=1)


def days_in_month(d: dt.date) -> int:
    return month_end(d).day


def month_range(start: dt.date, count: int) -> list[dt.date]:
    start = month_start(start)
    return [add_months(start, i) for i in range(count)]


def _as_day_array(dates) -> np.ndarray:
    arr = np.asarray([np.datetime64(to_date(d), "D") for d in dates], dtype="datetime64[D]")
    return arr.reshape(-1)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Immutable named series on a daily or monthly calendar grid.

    ``dates`` must be strictly increasing and, for monthly series, fall on
    the first of the month. Non-missing values must be finite.
    """

    name: str
    frequency: Frequency
    dates: np.ndarray
    values: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        freq = Frequency.parse(self.frequency)
        dates = self.dates
        if not (isinstance(dates, np.ndarray) and dates.dtype == np.dtype("datetime64[D]")):
            dates = _as_day_array(dates)
        else:
            dates = dates.copy()
        values = np.array(self.values, dtype=float).reshape(-1)
        if dates.shape != values.shape:
            raise ValidationError(
                f"series {self.name!r}: {dates.size} dates but {values.size} values"
            )
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            bad = int(np.argmax(np.diff(dates) <= np.timedelta64(0, "D"))) + 1
            raise ValidationError(
                f"series {self.name!r}: dates not strictly increasing at {dates[bad]}"
            )
        if np.any(np.isinf(values)):
            bad = int(np.argmax(np.isinf(values)))
            raise ValidationError(f"series {self.name!r}: non-finite value at {dates[bad]}")
        if freq is Frequency.MONTHLY and dates.size:
            days = dates - dates.astype("datetime64[M]").astype("datetime64[D]")
            off = np.nonzero(days != np.timedelta64(0, "D"))[0]
            if off.size:
                raise FrequencyMismatch(
                    f"series {self.name!r}: monthly observation {dates[off[0]]} is not on day 1"
                )
        dates.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "frequency", freq)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {})

    # construction helpers
    @classmethod
    def from_pairs(cls, name: str, frequency, pairs: Iterable[tuple]) -> "TimeSeries":
        pairs = list(pairs)
        dates = [p[0] for p in pairs]
        values = [np.nan if p[1] is None else p[1] for p in pairs]
        return cls(name, Frequency.parse(frequency), _as_day_array(dates), np.array(values, dtype=float))

    @classmethod
    def daily(cls, name: str, start, values: Sequence[float]) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        start = np.datetime64(to_date(start), "D")
        return cls(name, Frequency.DAILY, start + np.arange(values.size) * DAY, values)

    @classmethod
    def monthly(cls, name: str, start, values: Sequence[float]) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        dates = month_range(to_date(start), values.size)
        return cls(name, Frequency.MONTHLY, _as_day_array(dates), values)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.name == other.name
            and self.frequency is other.frequency
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self) -> str:
        span = f"{self.dates[0]}..{self.dates[-1]}" if len(self) else "empty"
        return f"TimeSeries({self.name!r}, {self.frequency.value}, n={len(self)}, {span})"

    @property
    def start(self) -> dt.date:
        return self.dates[0].item()

    @property
    def end(self) -> dt.date:
        return self.dates[-1].item()

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def date_list(self) -> list[dt.date]:
        return [d.item() for d in self.dates]

    def observed(self) -> np.ndarray:
        """Non-missing values."""
        return self.values[~self.missing]

    def items(self):
        for d, v in zip(self.dates, self.values):
            yield d.item(), (None if math.isnan(v) else float(v))

    def value_at(self, date) -> float:
        """Value at ``date``; raises ``KeyError`` if the date is not on the series."""
        if not self._index:
            self._index.update({d.item(): i for i, d in enumerate(self.dates)})
        return float(self.values[self._index[to_date(date)]])

    def has(self, date) -> bool:
        try:
            return not math.isnan(self.value_at(date))
        except KeyError:
            return False

    def is_contiguous(self) -> bool:
        """True when no grid point between the first and last date is absent."""
        if len(self) < 2:
            return True
        if self.frequency is Frequency.DAILY:
            return bool(np.all(np.diff(self.dates) == DAY))
        months = self.dates.astype("datetime64[M]").astype(int)
        return bool(np.all(np.diff(months) == 1))

    def rename(self, name: str) -> "TimeSeries":
        return TimeSeries(name, self.frequency, self.dates, self.values)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.name, self.frequency, self.dates, values)

    def scale(self, factor: float, offset: float = 0.0) -> "TimeSeries":
        return self.with_values(self.values * factor + offset)

    def between(self, start=None, end=None) -> "TimeSeries":
        """Observations with ``start <= date < end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(to_date(start), "D")
        if end is not None:
            mask &= self.dates < np.datetime64(to_date(end), "D")
        return TimeSeries(self.name, self.frequency, self.dates[mask], self.values[mask])

    def before(self, date) -> "TimeSeries":
        return self.between(end=date)

    def trim(self) -> "TimeSeries":
        """Drop leading and trailing missing values."""
        ok = np.nonzero(~self.missing)[0]
        if ok.size == 0:
            return TimeSeries(self.name, self.frequency, self.dates[:0], self.values[:0])
        return TimeSeries(
            self.name, self.frequency, self.dates[ok[0] : ok[-1] + 1], self.values[ok[0] : ok[-1] + 1]
        )


def interpolate_gaps(series: TimeSeries) -> TimeSeries:
    """Expand a daily series onto every calendar day and fill interior gaps.

    Interior missing days (absent rows or missing values) are linearly
    interpolated between the nearest observed neighbours by date distance.
    Leading and trailing missing values stay missing.
    """
    if series.frequency is not Frequency.DAILY:
        raise FrequencyMismatch(f"series {series.name!r}: interpolate_gaps needs a daily series")
    obs = ~series.missing
    if obs.sum() < 2:
        raise InsufficientData(
            f"series {series.name!r}: need at least 2 non-missing values to interpolate, "
            f"found {int(obs.sum())}"
        )
    start, stop = series.dates[0], series.dates[-1]
    grid = np.arange(start, stop + DAY, DAY)
    x_obs = (series.dates[obs] - start).astype(int)
    y_obs = series.values[obs]
    x = (grid - start).astype(int)
    filled = np.interp(x, x_obs, y_obs)
    filled[(x < x_obs[0]) | (x > x_obs[-1])] = np.nan
    # keep observed values bit-exact
    pos = (series.dates - start).astype(int)
    filled[pos[obs]] = y_obs
    return TimeSeries(series.name, Frequency.DAILY, grid, filled)


def count_gaps(series: TimeSeries) -> int:
    """Number of interior calendar days that :func:`interpolate_gaps` would fill."""
    obs_dates = series.dates[~series.missing]
    if obs_dates.size < 2:
        return 0
    span = int((obs_dates[-1] - obs_dates[0]).astype(int)) + 1
    return span - int(obs_dates.size)


def fractional_change(series: TimeSeries, horizon_days: int = 7) -> TimeSeries:
    """``(v[t] - v[t-h]) / v[t-h]`` on a gap-free daily series; first ``h`` days dropped."""
    if horizon_days < 1:
        raise ValidationError(f"horizon_days must be positive, got {horizon_days}")
    if series.frequency is not Frequency.DAILY:
        raise FrequencyMismatch(f"series {series.name!r}: fractional_change needs a daily series")
    if not series.is_contiguous():
        raise ValidationError(
            f"series {series.name!r}: has missing calendar days; run interpolate_gaps first"
        )
    v = series.values
    h = horizon_days
    if v.size <= h:
        return TimeSeries(series.name, Frequency.DAILY, series.dates[:0], v[:0])
    past, now = v[:-h], v[h:]
    zero = np.nonzero(past == 0.0)[0]
    if zero.size:
        i = int(zero[0]) + h
        raise DivisionByZero(
            f"series {series.name!r}: zero base value at {series.dates[i - h]} "
            f"(needed for {series.dates[i]})",
            where=series.dates[i].item(),
        )
    return TimeSeries(series.name, Frequency.DAILY, series.dates[h:], (now - past) / past)


def downsample_fill(series: TimeSeries) -> TimeSeries:
    """Spread each monthly value over every calendar day of its month."""
    if series.frequency is not Frequency.MONTHLY:
        raise FrequencyMismatch(f"series {series.name!r}: downsample_fill needs a monthly series")
    if np.any(series.missing):
        d = series.dates[np.argmax(series.missing)]
        raise MissingObservation(f"series {series.name!r}: missing monthly value at {d}")
    dates, values = [], []
    for d, v in zip(series.dates, series.values):
        first = d.item()
        n = days_in_month(first)
        dates.append(d + np.arange(n) * DAY)
        values.append(np.full(n, v))
    if not dates:
        return TimeSeries(series.name, Frequency.DAILY, series.dates[:0], series.values[:0])
    return TimeSeries(series.name, Frequency.DAILY, np.concatenate(dates), np.concatenate(values))


def lag_window(series: TimeSeries, reference, J: int) -> np.ndarray:
    """Last ``J`` daily values at or before ``reference``, most recent first."""
    if J < 1:
        raise ValidationError(f"J must be positive, got {J}")
    ref = np.datetime64(to_date(reference), "D")
    end = int(np.searchsorted(series.dates, ref, side="right"))
    if end < J:
        raise InsufficientHistory(
            f"series {series.name!r}: {J} lags requested at {ref} but only {end} observations "
            f"available (short by {J - end})",
            shortfall=J - end,
        )
    window = series.values[end - J : end][::-1]
    dates = series.dates[end - J : end]
    if dates[-1] - dates[0] != (J - 1) * DAY:
        raise ValidationError(f"series {series.name!r}: lag window before {ref} spans a calendar gap")
    if np.any(np.isnan(window)):
        raise MissingObservation(f"series {series.name!r}: missing value in lag window before {ref}")
    return window.copy()


# CSV input/output


def read_series_csv(path, name: str | None = None, frequency="daily") -> TimeSeries:
    """Read a ``date,value`` CSV. Empty cells are missing values."""
    path = Path(path)
    freq = Frequency.parse(frequency)
    name = name or path.stem
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise FormatError(f"cannot open file: {exc.strerror}", path=path) from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise FormatError("empty file, expected header 'date,value'", path=path, line=1)
        if [h.strip().lower() for h in header] != ["date", "value"]:
            raise FormatError(f"expected header 'date,value', got {','.join(header)!r}", path=path, line=1)
        dates, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise FormatError(f"expected 2 columns, got {len(row)}", path=path, line=lineno)
            raw_date, raw_value = row[0].strip(), row[1].strip()
            try:
                d = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise FormatError(f"invalid date {raw_date!r}, expected YYYY-MM-DD", path=path, line=lineno) from None
            if raw_value == "":
                v = np.nan
            else:
                try:
                    v = float(raw_value)
                except ValueError:
                    raise FormatError(f"invalid number {raw_value!r} in column 'value'", path=path, line=lineno) from None
                if not math.isfinite(v):
                    raise FormatError(f"non-finite value {raw_value!r} in column 'value'", path=path, line=lineno)
            if dates and d <= dates[-1]:
                raise FormatError(f"date {d} is not after previous date {dates[-1]}", path=path, line=lineno)
            if freq is Frequency.MONTHLY and d.day != 1:
                raise FrequencyMismatch(
                    f"{path}:{lineno}: date {d} is not on the monthly grid (day 1) in column 'date'"
                )
            dates.append(d)
            values.append(v)
    return TimeSeries(name, freq, _as_day_array(dates), np.array(values, dtype=float))


def format_value(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_series_csv(series: TimeSeries, path) -> None:
    with Path(path).open("w", newline="") as handle:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(series.dates, series.values):
            w.writerow([str(d), format_value(v)])
