"""Forecasters behind one interface: the AR(1) benchmark, MIDAS, and
predictions produced elsewhere and exchanged by CSV file.

A forecaster is called once per evaluation month with only the data dated
before that month and returns a :class:`ForecastRecord`.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol

import numpy as np

from .errors import DegenerateVariance, FormatError, InsufficientData, InvalidQuantiles, MissingObservation
from .series import Frequency, TimeSeries, add_months, to_date


@dataclass(frozen=True)
class ForecastRecord:
    date: dt.date
    point: float
    quantiles: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "date", to_date(self.date))
        if not math.isfinite(self.point):
            raise InvalidQuantiles(f"{self.date}: point forecast must be finite")
        if self.quantiles:
            q = {float(k): float(v) for k, v in sorted(self.quantiles.items())}
            for level in q:
                if not 0.0 < level < 1.0:
                    raise InvalidQuantiles(f"{self.date}: quantile level {level} outside (0, 1)")
            if any(not math.isfinite(v) for v in q.values()):
                raise InvalidQuantiles(f"{self.date}: quantile values must be finite")
            pairs = list(q.items())
            for (l1, v1), (l2, v2) in zip(pairs, pairs[1:]):
                if v2 < v1:
                    raise InvalidQuantiles(f"{self.date}: quantile q{l2:g}={v2} is below q{l1:g}={v1}")
            object.__setattr__(self, "quantiles", q)
        else:
            object.__setattr__(self, "quantiles", None)


class Forecaster(Protocol):
    name: str
    stateless: bool

    def forecast(self, month: dt.date, target: TimeSeries, exogenous: Mapping[str, TimeSeries]) -> ForecastRecord:
        ...


# AR(1) benchmark


@dataclass(frozen=True)
class Ar1Model:
    beta: float
    n_obs: int
    intercept: float = 0.0


def _consecutive_pairs(target: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    prev, cur = [], []
    for (d0, v0), (d1, v1) in zip(target.items(), list(target.items())[1:]):
        if v0 is None or v1 is None or add_months(d0, 1) != d1:
            continue
        prev.append(v0)
        cur.append(v1)
    return np.array(prev), np.array(cur)


def ar1_fit(target: TimeSeries, intercept: bool = False) -> Ar1Model:
    """Least-squares ``y[t] = beta * y[t-1]`` over consecutive monthly pairs.

    With ``intercept=True`` fits ``y[t] = a + beta * y[t-1]`` instead.
    """
    if target.frequency is not Frequency.MONTHLY:
        raise InsufficientData(f"target {target.name!r} must be monthly")
    prev, cur = _consecutive_pairs(target)
    if prev.size < 2:
        raise InsufficientData(
            f"target {target.name!r}: AR(1) needs at least 3 consecutive monthly observations"
        )
    if intercept:
        dp = prev - prev.mean()
        sxx = dp @ dp
        if sxx == 0:
            raise DegenerateVariance(f"target {target.name!r}: lagged values have zero variance")
        beta = float(dp @ (cur - cur.mean()) / sxx)
        return Ar1Model(beta, int(prev.size) + 1, float(cur.mean() - beta * prev.mean()))
    sxx = float(prev @ prev)
    if sxx == 0:
        raise DegenerateVariance(f"target {target.name!r}: sum of squared lagged values is zero")
    return Ar1Model(float(prev @ cur) / sxx, int(prev.size) + 1)


def ar1_predict(model: Ar1Model, previous: float) -> float:
    return model.intercept + model.beta * previous


def _previous_value(target: TimeSeries, month: dt.date) -> float:
    prev = add_months(month, -1)
    try:
        v = target.value_at(prev)
    except KeyError:
        raise MissingObservation(f"target {target.name!r}: no observation for {prev}") from None
    if math.isnan(v):
        raise MissingObservation(f"target {target.name!r}: missing value at {prev}")
    return v


@dataclass
class Ar1Forecaster:
    """AR(1) benchmark; refits on the visible history unless ``model`` is fixed."""

    model: Ar1Model | None = None
    intercept: bool = False
    name: str = "benchmark"
    stateless: bool = True

    def forecast(self, month, target, exogenous=None) -> ForecastRecord:
        month = to_date(month)
        model = self.model or ar1_fit(target, intercept=self.intercept)
        return ForecastRecord(month, ar1_predict(model, _previous_value(target, month)))


@dataclass
class MidasForecaster:
    """MIDAS nowcasts; refits on the visible window unless ``model`` is fixed."""

    spec: "object"
    model: "object | None" = None
    name: str = "midas"
    stateless: bool = True

    def forecast(self, month, target, exogenous) -> ForecastRecord:
        from .midas import fit, nowcast

        month = to_date(month)
        model = self.model if self.model is not None else fit(target, exogenous, self.spec)
        return ForecastRecord(month, nowcast(model, exogenous, target, month))


@dataclass
class CallableForecaster:
    """Adapter for a plain ``f(month, target, exogenous) -> float``."""

    func: Callable
    name: str = "custom"
    stateless: bool = True

    def forecast(self, month, target, exogenous) -> ForecastRecord:
        month = to_date(month)
        return ForecastRecord(month, float(self.func(month, target, exogenous)))


@dataclass
class ExternalForecaster:
    """Replays predictions produced by an external model."""

    records: list
    name: str = "external"
    stateless: bool = True
    _by_date: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._by_date = {r.date: r for r in self.records}

    @classmethod
    def from_file(cls, path, name: str = "external") -> "ExternalForecaster":
        return cls(load_external_forecasts(path), name=name)

    def forecast(self, month, target=None, exogenous=None) -> ForecastRecord:
        month = to_date(month)
        try:
            return self._by_date[month]
        except KeyError:
            raise MissingObservation(f"external forecasts ({self.name}) have no row for {month}") from None


# external forecast files


def _quantile_level(column: str, path, line: int = 1) -> float:
    try:
        level = float(column[1:])
    except ValueError:
        raise FormatError(f"invalid quantile column {column!r}, expected q<level>", path=path, line=line) from None
    if not 0.0 < level < 1.0:
        raise FormatError(f"quantile column {column!r} has level outside (0, 1)", path=path, line=line)
    return level


def load_external_forecasts(path) -> list[ForecastRecord]:
    """Parse ``date,point[,q0.1,...]``; returns records sorted by date."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot open file: {exc.strerror}", path=path) from None
    if not text.strip():
        return []
    rows = list(csv.reader(text.splitlines()))
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["date", "point"]:
        raise FormatError(f"expected header starting 'date,point', got {','.join(header)!r}", path=path, line=1)
    levels = []
    for col in header[2:]:
        if not col.startswith("q"):
            raise FormatError(f"unexpected column {col!r}", path=path, line=1)
        levels.append(_quantile_level(col, path))
    if len(set(levels)) != len(levels):
        raise FormatError("duplicate quantile columns", path=path, line=1)
    records, seen = [], {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise FormatError(f"expected {len(header)} columns, got {len(row)}", path=path, line=lineno)
        try:
            d = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise FormatError(f"invalid date {row[0]!r}", path=path, line=lineno) from None
        if d.day != 1:
            raise FormatError(f"date {d} is not month-anchored (day 1)", path=path, line=lineno)
        try:
            nums = [float(c) for c in row[1:]]
        except ValueError:
            raise FormatError("non-numeric forecast value", path=path, line=lineno) from None
        if not all(math.isfinite(v) for v in nums):
            raise FormatError("non-finite forecast value", path=path, line=lineno)
        if d in seen:
            raise FormatError(f"duplicate date {d} (first seen on line {seen[d]})", path=path, line=lineno)
        seen[d] = lineno
        q = dict(zip(levels, nums[1:])) if levels else None
        try:
            records.append(ForecastRecord(d, nums[0], q))
        except InvalidQuantiles as exc:
            raise InvalidQuantiles(f"{path}:{lineno}: {exc}") from None
    return sorted(records, key=lambda r: r.date)


def write_external_forecasts(records, path) -> None:
    records = sorted(records, key=lambda r: r.date)
    levels = sorted({lvl for r in records if r.quantiles for lvl in r.quantiles})
    for r in records:
        if levels and sorted(r.quantiles or ()) != levels:
            raise ValueError(f"{r.date}: every record must carry the same quantile levels")
    with Path(path).open("w", newline="") as handle:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(["date", "point"] + [f"q{lvl:g}" for lvl in levels])
        for r in records:
            q = r.quantiles or {}
            w.writerow([r.date.isoformat(), repr(r.point)] + [repr(q[l]) for l in levels])
