"""Forecast accuracy metrics, the 5% outperformance rule, and the
rolling-window backtest."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    DegenerateReference,
    DegenerateVariance,
    DivisionByZero,
    InsufficientData,
    InsufficientHistory,
    MissingObservation,
    ShapeMismatch,
    ValidationError,
)
from .forecasters import ForecastRecord
from .series import Frequency, TimeSeries, month_range, to_date

ERROR_METRICS = ("mae", "mape", "mse")
GOODNESS_METRICS = ("correlation", "r_squared", "adj_r_squared")
METRICS = ERROR_METRICS + GOODNESS_METRICS
LABELS = {
    "mae": "MAE",
    "mape": "MAPE",
    "mse": "MSE",
    "correlation": "Correlation",
    "r_squared": "R-squared",
    "adj_r_squared": "Adjusted R-squared",
}
LOWER_BOUND = 0.95
UPPER_BOUND = 1.05


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actual, dtype=float).reshape(-1)
    yhat = np.asarray(predicted, dtype=float).reshape(-1)
    if y.size != yhat.size:
        raise ShapeMismatch(f"actual has {y.size} values but predicted has {yhat.size}")
    if y.size == 0:
        raise ShapeMismatch("metrics need at least one value")
    return y, yhat


def mae(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    return float(np.mean(np.abs(y - yhat)))


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent (factor 100 included)."""
    y, yhat = _pair(actual, predicted)
    zero = np.nonzero(y == 0)[0]
    if zero.size:
        raise DivisionByZero(f"MAPE undefined: actual value is zero at index {int(zero[0])}", where=int(zero[0]))
    return float(100.0 * np.mean(np.abs((y - yhat) / y)))


def mse(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    return float(np.mean((y - yhat) ** 2))


def pearson(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    if y.size < 2:
        raise ShapeMismatch("correlation needs at least two values")
    dy, dp = y - y.mean(), yhat - yhat.mean()
    sy, sp = math.sqrt(dy @ dy), math.sqrt(dp @ dp)
    if sy == 0 or sp == 0:
        raise DegenerateVariance("correlation undefined: %s is constant" % ("actual" if sy == 0 else "predicted"))
    return float(np.clip((dy @ dp) / (sy * sp), -1.0, 1.0))


def r2(actual, predicted) -> float:
    y, yhat = _pair(actual, predicted)
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0:
        raise DegenerateVariance("R-squared undefined: actual values are constant")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / tss


def adj_r2(r_squared: float, n: int, k: int) -> float:
    """Adjusted R^2 for ``k`` predictors (intercept not counted)."""
    if n <= k + 1:
        raise InsufficientData(f"adjusted R-squared needs n > k + 1 (n={n}, k={k})")
    return 1.0 - (1.0 - r_squared) * (n - 1) / (n - k - 1)


@dataclass(frozen=True)
class MetricReport:
    mae: float
    mape: float
    mse: float
    correlation: float
    r_squared: float
    adj_r_squared: float
    n: int | None = None
    k: int | None = None
    name: str = ""

    @classmethod
    def compute(cls, actual, predicted, k: int, name: str = "") -> "MetricReport":
        y, yhat = _pair(actual, predicted)
        rsq = r2(y, yhat)
        return cls(
            mae=mae(y, yhat), mape=mape(y, yhat), mse=mse(y, yhat),
            correlation=pearson(y, yhat), r_squared=rsq,
            adj_r_squared=adj_r2(rsq, y.size, k), n=int(y.size), k=int(k), name=name,
        )

    def metric(self, key: str) -> float:
        return float(getattr(self, key))

    def to_dict(self) -> dict:
        d = {"name": self.name, "n": self.n, "k": self.k}
        d.update({m: self.metric(m) for m in METRICS})
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricReport":
        missing = [m for m in METRICS if m not in d]
        if missing:
            raise ValidationError(f"metric report lacks {', '.join(missing)}")
        return cls(
            **{m: float(d[m]) for m in METRICS},
            n=None if d.get("n") is None else int(d["n"]),
            k=None if d.get("k") is None else int(d["k"]),
            name=str(d.get("name", "")),
        )

    def table(self) -> str:
        lines = [f"{'Metric':<20}{self.name or 'value':>14}"]
        lines += [f"{LABELS[m]:<20}{self.metric(m):>14.6g}" for m in METRICS]
        if self.n is not None:
            lines.append(f"{'n':<20}{self.n:>14d}")
        if self.k is not None:
            lines.append(f"{'k':<20}{self.k:>14d}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MetricVerdict:
    candidate: float
    reference: float
    ratio: float
    outperforms: bool


@dataclass(frozen=True)
class ComparisonVerdict:
    candidate: str
    reference: str
    per_metric: dict
    overall: bool

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "reference": self.reference,
            "overall": self.overall,
            "per_metric": {
                m: {"candidate": v.candidate, "reference": v.reference, "ratio": v.ratio, "outperforms": v.outperforms}
                for m, v in self.per_metric.items()
            },
        }

    def table(self) -> str:
        c, r = self.candidate or "candidate", self.reference or "reference"
        head = f"{'Metric':<20}{c:>14}{r:>14}{'ratio':>10}  outperforms"
        lines = [head, "-" * len(head)]
        for m, v in self.per_metric.items():
            mark = "*" if v.outperforms else " "
            lines.append(f"{LABELS[m]:<20}{v.candidate:>13.6g}{mark}{v.reference:>14.6g}{v.ratio:>10.6g}  {'yes' if v.outperforms else 'no'}")
        lines.append("-" * len(head))
        lines.append(f"{c} outperforms {r}: {'yes' if self.overall else 'no'}")
        return "\n".join(lines) + "\n"


def compare(candidate: MetricReport, reference: MetricReport) -> ComparisonVerdict:
    """Strict 5% rule: error ratios must be below 0.95 and goodness ratios above 1.05."""
    per = {}
    for m in METRICS:
        c, r = candidate.metric(m), reference.metric(m)
        if r == 0:
            raise DegenerateReference(f"reference {LABELS[m]} is zero; ratio undefined")
        ratio = c / r
        ok = ratio < LOWER_BOUND if m in ERROR_METRICS else ratio > UPPER_BOUND
        per[m] = MetricVerdict(c, r, ratio, bool(ok))
    return ComparisonVerdict(candidate.name, reference.name, per, all(v.outperforms for v in per.values()))


@dataclass(frozen=True)
class BacktestResult:
    predictions: TimeSeries
    report: MetricReport
    actuals: TimeSeries
    records: list = field(default_factory=list)

    def __iter__(self):
        yield self.predictions
        yield self.report


def rolling_backtest(forecaster, target: TimeSeries, exogenous: Mapping[str, TimeSeries] | None,
                     eval_start, eval_months: int = 24, context_days: int = 2400, k: int = 1) -> BacktestResult:
    """Issue one forecast per evaluation month from the preceding ``context_days`` of data.

    The forecaster sees target and exogenous observations dated in
    ``[month - context_days, month)`` only.
    """
    exogenous = dict(exogenous or {})
    if target.frequency is not Frequency.MONTHLY:
        raise ValidationError(f"target {target.name!r} must be monthly")
    if eval_months < 1 or context_days < 1:
        raise ValidationError("eval_months and context_days must be positive")
    eval_start = to_date(eval_start).replace(day=1)
    earliest = eval_start - dt.timedelta(days=context_days)
    for s in [target, *exogenous.values()]:
        if not len(s) or s.start > earliest:
            first = s.start if len(s) else None
            short = (first - earliest).days if first else context_days
            raise InsufficientHistory(
                f"series {s.name!r} starts {first}, but {context_days} days of history before "
                f"{eval_start} require data from {earliest} (short by {short} days)",
                shortfall=short,
            )
    months = month_range(eval_start, eval_months)
    actual, records = [], []
    for month in months:
        if not target.has(month):
            raise MissingObservation(f"target {target.name!r} has no value for evaluation month {month}")
        lo = month - dt.timedelta(days=context_days)
        vis_target = target.between(lo, month)
        vis_exog = {n: s.between(lo, month) for n, s in exogenous.items()}
        rec = forecaster.forecast(month, vis_target, vis_exog)
        if not isinstance(rec, ForecastRecord):
            rec = ForecastRecord(month, float(rec))
        records.append(rec)
        actual.append(target.value_at(month))
    name = getattr(forecaster, "name", "forecast")
    pred = TimeSeries.from_pairs(name, "monthly", [(r.date, r.point) for r in records])
    acts = TimeSeries.from_pairs(target.name, "monthly", zip(months, actual))
    report = MetricReport.compute(actual, pred.values, k=k, name=name)
    return BacktestResult(pred, report, acts, records)
