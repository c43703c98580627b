"""Exploratory diagnostics: autocorrelation, additive decomposition,
predictor correlation matrix and variance inflation factors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateVariance, ExactCollinearity, InsufficientData, MissingObservation, ShapeMismatch
from .series import Frequency, TimeSeries

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class AcfResult:
    coefficients: np.ndarray
    confidence_band: float
    n: int

    @property
    def max_lag(self) -> int:
        return self.coefficients.size - 1

    def significant_lags(self) -> list[int]:
        """Lags >= 1 whose coefficient lies outside the band."""
        c = self.coefficients
        return [k for k in range(1, c.size) if abs(c[k]) > self.confidence_band]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "confidence_band": self.confidence_band,
            "coefficients": [float(c) for c in self.coefficients],
        }


@dataclass(frozen=True)
class Decomposition:
    trend: TimeSeries
    seasonal: TimeSeries
    residual: TimeSeries
    period: int

    def to_rows(self, original: TimeSeries) -> list[tuple]:
        """Long-format rows ``(component, date, value)`` for plotting."""
        rows = []
        for comp, s in (("observed", original), ("trend", self.trend),
                        ("seasonal", self.seasonal), ("residual", self.residual)):
            rows.extend((comp, d, v) for d, v in s.items())
        return rows


def _values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        s = series.trim()
        if np.any(s.missing):
            raise MissingObservation(f"series {series.name!r}: interior missing values")
        return np.asarray(s.values, dtype=float)
    x = np.asarray(series, dtype=float).reshape(-1)
    if np.any(~np.isfinite(x)):
        raise MissingObservation("input contains missing or non-finite values")
    return x


def acf(series, max_lag: int) -> AcfResult:
    """Sample autocorrelation up to ``max_lag`` with the white-noise band.

    Uses mean-centred values and the biased (divide by ``n``) autocovariance.
    The band is the constant ``1.96 / sqrt(n)`` half-width.
    """
    x = _values(series)
    n = x.size
    if max_lag < 1:
        raise ValueError("max_lag must be positive")
    if n < max_lag + 2:
        raise InsufficientData(f"acf with max_lag={max_lag} needs at least {max_lag + 2} values, got {n}")
    d = x - x.mean()
    gamma0 = d @ d / n
    if gamma0 == 0:
        raise DegenerateVariance("acf of a constant series is undefined")
    coef = np.array([1.0] + [(d[k:] @ d[:-k]) / n / gamma0 for k in range(1, max_lag + 1)])
    return AcfResult(coefficients=coef, confidence_band=Z_95 / np.sqrt(n), n=n)


def _centered_moving_average(x: np.ndarray, period: int) -> np.ndarray:
    if period % 2 == 0:
        filt = np.r_[0.5, np.ones(period - 1), 0.5] / period
    else:
        filt = np.ones(period) / period
    half = filt.size // 2
    trend = np.full(x.size, np.nan)
    trend[half : x.size - half] = np.convolve(x, filt, mode="valid")
    return trend


def seasonal_decompose(series: TimeSeries, period: int = 12) -> Decomposition:
    """Additive moving-average decomposition into trend, seasonal and residual."""
    if period < 2:
        raise ValueError("period must be at least 2")
    if series.frequency is Frequency.MONTHLY and not series.is_contiguous():
        raise MissingObservation(f"series {series.name!r}: monthly dates are not consecutive")
    if np.any(series.missing):
        raise MissingObservation(f"series {series.name!r}: decomposition needs a series without missing values")
    x = series.values
    n = x.size
    if n < 2 * period:
        raise InsufficientData(f"series {series.name!r}: decomposition needs at least {2 * period} values, got {n}")
    trend = _centered_moving_average(x, period)
    detrended = x - trend
    phase = np.arange(n) % period
    means = np.array([np.nanmean(detrended[phase == p]) for p in range(period)])
    means -= means.mean()
    seasonal = means[phase]
    residual = x - trend - seasonal
    mk = lambda suffix, v: TimeSeries(f"{series.name}_{suffix}", series.frequency, series.dates, v)
    return Decomposition(mk("trend", trend), mk("seasonal", seasonal), mk("residual", residual), period)


def align(predictors: Sequence[TimeSeries]) -> tuple[np.ndarray, np.ndarray]:
    """Common dates with no missing value in any series, and the stacked values (n x p)."""
    common = predictors[0].dates[~predictors[0].missing]
    for s in predictors[1:]:
        common = np.intersect1d(common, s.dates[~s.missing])
    cols = []
    for s in predictors:
        idx = np.searchsorted(s.dates, common)
        cols.append(s.values[idx])
    return common, np.column_stack(cols) if cols else np.empty((0, 0))


def pearson_matrix(data: np.ndarray, names: Sequence[str] | None = None) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    names = list(names) if names is not None else [f"x{i}" for i in range(data.shape[1])]
    d = data - data.mean(axis=0)
    ss = np.sqrt(np.einsum("ij,ij->j", d, d))
    for name, s in zip(names, ss):
        if s == 0:
            raise DegenerateVariance(f"series {name!r} has zero variance on the common dates")
    r = (d.T @ d) / np.outer(ss, ss)
    r = (r + r.T) / 2
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


def correlation_matrix(predictors: Sequence[TimeSeries]) -> np.ndarray:
    """Pearson correlation between predictors over their common observed dates."""
    if len(predictors) < 2:
        raise ShapeMismatch("correlation_matrix needs at least two series")
    common, data = align(predictors)
    if common.size < 3:
        raise InsufficientData(f"only {common.size} common dates without missing values; need at least 3")
    return pearson_matrix(data, [s.name for s in predictors])


def _has_constant(X: np.ndarray) -> bool:
    return any(np.all(col == col[0]) and col[0] != 0 for col in X.T)


def vif(design, names: Sequence[str] | None = None) -> dict[str, float]:
    """Variance inflation factor for every column of ``design``.

    ``design`` is an ``n x p`` array (or a mapping name -> column) that should
    include the constant column. Each column is regressed on all the others;
    the auxiliary R^2 is centred when the other columns contain a constant and
    uncentred otherwise, so the constant column itself gets a VIF too.
    """
    if isinstance(design, Mapping):
        names = list(design)
        X = np.column_stack([np.asarray(design[k], dtype=float) for k in names])
    else:
        X = np.asarray(design, dtype=float)
        names = list(names) if names is not None else [f"x{i}" for i in range(X.shape[1])]
    n, p = X.shape
    if len(names) != p:
        raise ShapeMismatch(f"{len(names)} names for {p} columns")
    if p < 2:
        raise ShapeMismatch("vif needs at least two columns")
    if n < p + 1:
        raise InsufficientData(f"vif needs more rows than columns ({n} rows, {p} columns)")
    out = {}
    for j, name in enumerate(names):
        y = X[:, j]
        others = np.delete(X, j, axis=1)
        coef, *_ = np.linalg.lstsq(others, y, rcond=None)
        rss = float(np.sum((y - others @ coef) ** 2))
        tss = float(np.sum((y - y.mean()) ** 2)) if _has_constant(others) else float(y @ y)
        if tss == 0:
            raise ExactCollinearity(f"column {name!r} has zero variance", column=name)
        r2 = 1.0 - rss / tss
        if r2 >= 1.0 - 1e-12:
            raise ExactCollinearity(f"column {name!r} is an exact linear combination of the others", column=name)
        out[name] = 1.0 / (1.0 - r2)
    return out
