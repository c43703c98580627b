"""MIDAS regression with parametric lag weights.

A monthly target is regressed on an intercept, one weighted sum of ``J``
daily lags per exogenous variable, and lags of itself::

    y[t] = b0 + sum_i b_i * sum_j w_j(theta_i) * x_i[t, j] + sum_l c_l * y[t-l] + e[t]

The daily lags for month ``t`` end on the last calendar day of month
``t - 1``, so each row only uses information published before the month
being nowcast. The slopes are profiled out by OLS and the weight
parameters are found by multi-start Nelder-Mead on the residual sum of
squares.
"""

from __future__ import annotations

import datetime as dt
import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from .errors import (
    FitFailed,
    InsufficientHistory,
    InvalidParameter,
    MfnowError,
    MissingObservation,
    ParameterOverflow,
    ValidationError,
)
from .ols import OlsResult, ols, solve_lstsq
from .series import Frequency, TimeSeries, add_months, lag_window, to_date

DEFAULT_J = 22
MAX_EXP_ARG = 700.0


class WeightFamily(str, enum.Enum):
    BETA = "beta"
    EXP_ALMON = "exp_almon"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, value) -> "WeightFamily":
        if isinstance(value, WeightFamily):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {"expalmon": "exp_almon", "almon": "exp_almon", "exponential_almon": "exp_almon"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown weight family {value!r}; expected beta, exp_almon or uniform") from None

    @property
    def n_params(self) -> int:
        return 0 if self is WeightFamily.UNIFORM else 2


_NEUTRAL = {WeightFamily.BETA: (1.0, 1.0), WeightFamily.EXP_ALMON: (0.0, 0.0), WeightFamily.UNIFORM: ()}

START_GRIDS = {
    WeightFamily.BETA: tuple(itertools.product((0.5, 1.0, 2.0, 5.0), repeat=2)),
    WeightFamily.EXP_ALMON: tuple(itertools.product((-0.5, 0.0, 0.1), (-0.05, 0.0, 0.005))),
    WeightFamily.UNIFORM: ((),),
}

# initial simplex edge per parameter, in optimizer coordinates
_SIMPLEX_STEP = {WeightFamily.BETA: (0.25, 0.25), WeightFamily.EXP_ALMON: (0.05, 0.002)}


@dataclass(frozen=True)
class LagWeightSpec:
    family: WeightFamily = WeightFamily.BETA
    J: int = DEFAULT_J
    theta: tuple = None

    def __post_init__(self):
        fam = WeightFamily.parse(self.family)
        object.__setattr__(self, "family", fam)
        if int(self.J) != self.J or self.J < 1:
            raise InvalidParameter(f"J must be a positive integer, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))
        theta = _NEUTRAL[fam] if self.theta is None else tuple(float(t) for t in self.theta)
        if len(theta) != fam.n_params:
            raise InvalidParameter(f"{fam.value} weights take {fam.n_params} parameters, got {len(theta)}")
        object.__setattr__(self, "theta", theta)

    def with_theta(self, theta) -> "LagWeightSpec":
        return LagWeightSpec(self.family, self.J, theta)


def lag_weights(family, theta: Sequence[float], J: int) -> np.ndarray:
    """Normalised weights over lags ``0..J-1`` (lag 0 is the most recent day).

    beta
        two-parameter Beta density evaluated on the midpoint grid
        ``u = (j + 0.5) / J``.
    exp_almon
        ``exp(theta1 * i + theta2 * i**2)`` with ``i = j + 1``.
    uniform
        ``1 / J``.
    """
    family = WeightFamily.parse(family)
    if family is WeightFamily.UNIFORM:
        return np.full(J, 1.0 / J)
    a, b = (float(t) for t in theta)
    if family is WeightFamily.BETA:
        if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidParameter(f"beta weights need positive parameters, got ({a}, {b})")
        u = (np.arange(J) + 0.5) / J
        logw = (a - 1.0) * np.log(u) + (b - 1.0) * np.log1p(-u)
    else:
        if not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidParameter(f"exp_almon parameters must be finite, got ({a}, {b})")
        i = np.arange(1, J + 1, dtype=float)
        logw = a * i + b * i * i
        if logw.max() > MAX_EXP_ARG:
            raise ParameterOverflow(
                f"exp_almon({a}, {b}) overflows: exponent reaches {logw.max():.4g} > {MAX_EXP_ARG:g}"
            )
    w = np.exp(logw - logw.max())
    return w / w.sum()


def weights(spec: LagWeightSpec) -> np.ndarray:
    return lag_weights(spec.family, spec.theta, spec.J)


@dataclass(frozen=True)
class MidasSpec:
    exogenous: tuple = ()
    endogenous_lags: int = 1
    include_intercept: bool = True

    def __post_init__(self):
        items = self.exogenous.items() if isinstance(self.exogenous, Mapping) else self.exogenous
        terms = tuple((str(n), w if isinstance(w, LagWeightSpec) else LagWeightSpec(**w)) for n, w in items)
        names = [n for n, _ in terms]
        if len(set(names)) != len(names):
            raise ValidationError(f"exogenous names must be unique, got {names}")
        if self.endogenous_lags < 0:
            raise ValidationError("endogenous_lags must be non-negative")
        if not terms and self.endogenous_lags == 0:
            raise ValidationError("MIDAS spec needs at least one regressor")
        object.__setattr__(self, "exogenous", terms)
        object.__setattr__(self, "endogenous_lags", int(self.endogenous_lags))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.exogenous]

    def weight_spec(self, name: str) -> LagWeightSpec:
        return dict(self.exogenous)[name]

    def columns(self, target_name: str) -> list[str]:
        cols = ["const"] if self.include_intercept else []
        cols += self.names
        cols += [f"{target_name} t-{l}" for l in range(1, self.endogenous_lags + 1)]
        return cols

    def to_dict(self) -> dict:
        return {
            "exogenous": [
                {"name": n, "family": w.family.value, "J": w.J, "theta": list(w.theta)} for n, w in self.exogenous
            ],
            "endogenous_lags": self.endogenous_lags,
            "include_intercept": self.include_intercept,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MidasSpec":
        exog = tuple(
            (e["name"], LagWeightSpec(e.get("family", "beta"), e.get("J", DEFAULT_J), e.get("theta")))
            for e in d.get("exogenous", ())
        )
        return cls(exog, d.get("endogenous_lags", 1), d.get("include_intercept", True))


def reference_date(month) -> dt.date:
    """Last calendar day before ``month``: the information cut-off for that row."""
    return to_date(month).replace(day=1) - dt.timedelta(days=1)


@dataclass(frozen=True)
class LagData:
    """Everything the design needs except the weights, for the usable months."""

    target_name: str
    months: list
    y: np.ndarray
    blocks: dict  # name -> (n, J) lag matrix, column 0 most recent
    endog: np.ndarray  # (n, endogenous_lags)
    dropped: list = field(default_factory=list)  # (month, reason)


def _row_inputs(month, exogenous, target, spec):
    ref = reference_date(month)
    lags = {}
    for name, wspec in spec.exogenous:
        if name not in exogenous:
            raise ValidationError(f"no exogenous series named {name!r}")
        lags[name] = lag_window(exogenous[name], ref, wspec.J)
    endog = []
    for l in range(1, spec.endogenous_lags + 1):
        prev = add_months(to_date(month), -l)
        try:
            v = target.value_at(prev)
        except KeyError:
            raise InsufficientHistory(f"target {target.name!r}: no observation for {prev} (lag {l} of {month})") from None
        if math.isnan(v):
            raise MissingObservation(f"target {target.name!r}: missing value at {prev} (lag {l} of {month})")
        endog.append(v)
    return lags, np.array(endog, dtype=float)


def prepare(target: TimeSeries, exogenous: Mapping[str, TimeSeries], spec: MidasSpec) -> LagData:
    """Collect lag windows for every target month that has full coverage."""
    if target.frequency is not Frequency.MONTHLY:
        raise ValidationError(f"target {target.name!r} must be monthly")
    for name, _ in spec.exogenous:
        if name not in exogenous:
            raise ValidationError(f"no exogenous series named {name!r}")
        if exogenous[name].frequency is not Frequency.DAILY:
            raise ValidationError(f"exogenous series {name!r} must be daily")
    months, ys, endog, dropped = [], [], [], []
    blocks = {n: [] for n in spec.names}
    for month, y in target.items():
        if y is None:
            dropped.append((month, "missing target value"))
            continue
        try:
            lags, e = _row_inputs(month, exogenous, target, spec)
        except (InsufficientHistory, MissingObservation, ValidationError) as exc:
            dropped.append((month, str(exc)))
            continue
        months.append(month)
        ys.append(y)
        endog.append(e)
        for n in spec.names:
            blocks[n].append(lags[n])
    p = spec.endogenous_lags
    return LagData(
        target_name=target.name,
        months=months,
        y=np.array(ys, dtype=float),
        blocks={n: np.array(b, dtype=float).reshape(len(months), spec.weight_spec(n).J) for n, b in blocks.items()},
        endog=np.array(endog, dtype=float).reshape(len(months), p),
        dropped=dropped,
    )


def _theta_for(spec: MidasSpec, theta: Mapping | None) -> dict:
    theta = dict(theta or {})
    return {n: tuple(theta.get(n, w.theta)) for n, w in spec.exogenous}


def _assemble(data: LagData, spec: MidasSpec, theta: Mapping) -> np.ndarray:
    n = len(data.months)
    cols = [np.ones(n)] if spec.include_intercept else []
    for name, w in spec.exogenous:
        cols.append(data.blocks[name] @ lag_weights(w.family, theta[name], w.J))
    cols.extend(data.endog.T)
    return np.column_stack(cols) if cols else np.empty((n, 0))


@dataclass(frozen=True)
class Design:
    X: np.ndarray
    y: np.ndarray
    dates: list
    columns: list
    dropped: list


def build_design(target: TimeSeries, exogenous: Mapping[str, TimeSeries], spec: MidasSpec,
                 theta: Mapping | None = None) -> Design:
    """Design matrix for fixed weight parameters.

    Months without full lag coverage are left out and listed in ``dropped``;
    if no month survives, :class:`InsufficientHistory` lists them all.
    """
    data = prepare(target, exogenous, spec)
    return _design_from(data, spec, _theta_for(spec, theta))


def _design_from(data: LagData, spec: MidasSpec, theta: dict) -> Design:
    if not data.months:
        raise InsufficientHistory(
            f"no target month has full coverage; dropped: {', '.join(str(m) for m, _ in data.dropped)}",
            dropped=[m for m, _ in data.dropped],
        )
    X = _assemble(data, spec, theta)
    return Design(X, data.y.copy(), list(data.months), spec.columns(data.target_name), list(data.dropped))


@dataclass(frozen=True)
class StartResult:
    start: dict
    theta: dict | None
    rss: float
    start_rss: float
    iterations: int
    cause: str | None = None

    def to_dict(self) -> dict:
        return {
            "start": {k: list(v) for k, v in self.start.items()},
            "theta": None if self.theta is None else {k: list(v) for k, v in self.theta.items()},
            "rss": _num(self.rss),
            "start_rss": _num(self.start_rss),
            "iterations": self.iterations,
            "cause": self.cause,
        }


@dataclass(frozen=True, eq=False)
class MidasModel:
    spec: MidasSpec
    target_name: str
    columns: list
    beta: np.ndarray
    theta: dict
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    conf_intervals: np.ndarray
    residuals: TimeSeries
    fitted: TimeSeries
    r_squared: float
    adj_r_squared: float
    rss: float
    n_obs: int
    n_params: int
    df_resid: int
    starts: tuple = ()

    def coef(self, column: str) -> float:
        return float(self.beta[self.columns.index(column)])

    def weights(self, name: str) -> np.ndarray:
        w = self.spec.weight_spec(name)
        return lag_weights(w.family, self.theta[name], w.J)

    def summary_table(self) -> str:
        head = f"{'':<24}{'coef':>12}{'std err':>12}{'t':>12}{'P>|t|':>12}{'[0.025':>12}{'0.975]':>12}"
        lines = [f"MIDAS regression: {self.target_name}", "=" * len(head), head, "-" * len(head)]
        for i, c in enumerate(self.columns):
            lo, hi = self.conf_intervals[i]
            lines.append(
                f"{c:<24}{_g(self.beta[i]):>12}{_g(self.std_errors[i]):>12}{_g(self.t_stats[i]):>12}"
                f"{_g(self.p_values[i]):>12}{_g(lo):>12}{_g(hi):>12}"
            )
        lines.append("-" * len(head))
        lines.append(
            f"R-squared {_g(self.r_squared)}   Adj. R-squared {_g(self.adj_r_squared)}   "
            f"No. obs {self.n_obs}   Df resid {self.df_resid}"
        )
        for name in self.spec.names:
            fam = self.spec.weight_spec(name).family.value
            th = ", ".join(_g(t) for t in self.theta[name])
            lines.append(f"weights {name}: {fam}({th})")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "target": self.target_name,
            "spec": self.spec.to_dict(),
            "theta": {k: list(v) for k, v in self.theta.items()},
            "coefficients": [
                {
                    "name": c,
                    "coef": _num(self.beta[i]),
                    "std_err": _num(self.std_errors[i]),
                    "t": _num(self.t_stats[i]),
                    "p_value": _num(self.p_values[i]),
                    "ci_low": _num(self.conf_intervals[i, 0]),
                    "ci_high": _num(self.conf_intervals[i, 1]),
                }
                for i, c in enumerate(self.columns)
            ],
            "r_squared": _num(self.r_squared),
            "adj_r_squared": _num(self.adj_r_squared),
            "rss": _num(self.rss),
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "df_resid": self.df_resid,
            "residuals": [{"date": str(d), "value": _num(v)} for d, v in self.residuals.items()],
            "fitted": [{"date": str(d), "value": _num(v)} for d, v in self.fitted.items()],
            "optimizer": [s.to_dict() for s in self.starts],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MidasModel":
        coefs = d["coefficients"]
        arr = lambda key: np.array([_unnum(c[key]) for c in coefs], dtype=float)
        target = d["target"]
        res = TimeSeries.from_pairs(f"{target}_residual", "monthly", [(r["date"], _unnum(r["value"])) for r in d["residuals"]])
        fit = TimeSeries.from_pairs(f"{target}_fitted", "monthly", [(r["date"], _unnum(r["value"])) for r in d.get("fitted", [])])
        return cls(
            spec=MidasSpec.from_dict(d["spec"]),
            target_name=target,
            columns=[c["name"] for c in coefs],
            beta=arr("coef"),
            theta={k: tuple(v) for k, v in d["theta"].items()},
            std_errors=arr("std_err"),
            t_stats=arr("t"),
            p_values=arr("p_value"),
            conf_intervals=np.column_stack([arr("ci_low"), arr("ci_high")]),
            residuals=res,
            fitted=fit,
            r_squared=_unnum(d["r_squared"]),
            adj_r_squared=_unnum(d["adj_r_squared"]),
            rss=_unnum(d["rss"]),
            n_obs=int(d["n_obs"]),
            n_params=int(d["n_params"]),
            df_resid=int(d["df_resid"]),
        )


def _g(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.6g}"


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _unnum(v):
    return float("nan") if v is None else float(v)


def _model_from(design: Design, res: OlsResult, spec: MidasSpec, target_name: str, theta: dict, starts=()) -> MidasModel:
    dates = design.dates
    return MidasModel(
        spec=spec,
        target_name=target_name,
        columns=design.columns,
        beta=res.beta,
        theta={k: tuple(float(x) for x in v) for k, v in theta.items()},
        std_errors=res.std_errors,
        t_stats=res.t_stats,
        p_values=res.p_values,
        conf_intervals=res.conf_intervals,
        residuals=TimeSeries.from_pairs(f"{target_name}_residual", "monthly", zip(dates, res.residuals)),
        fitted=TimeSeries.from_pairs(f"{target_name}_fitted", "monthly", zip(dates, res.fitted)),
        r_squared=res.r_squared,
        adj_r_squared=res.adj_r_squared,
        rss=res.rss,
        n_obs=res.n_obs,
        n_params=res.n_params,
        df_resid=res.df_resid,
        starts=tuple(starts),
    )


def fit_fixed(target: TimeSeries, exogenous: Mapping[str, TimeSeries], spec: MidasSpec,
              theta: Mapping | None = None) -> MidasModel:
    """OLS fit with the weight parameters held at ``theta`` (or the spec's own)."""
    theta = _theta_for(spec, theta)
    design = build_design(target, exogenous, spec, theta)
    return _model_from(design, ols(design.X, design.y), spec, target.name, theta)


class _Objective:
    """RSS as a function of the packed optimizer vector.

    Beta parameters are optimised on the log scale so they stay positive.
    """

    def __init__(self, data: LagData, spec: MidasSpec):
        self.data = data
        self.spec = spec
        self.free = [(n, w) for n, w in spec.exogenous if w.family.n_params]
        self.fixed = {n: w.theta for n, w in spec.exogenous if not w.family.n_params}

    def unpack(self, z) -> dict:
        theta = dict(self.fixed)
        for i, (name, w) in enumerate(self.free):
            pair = z[2 * i : 2 * i + 2]
            theta[name] = tuple(np.exp(pair)) if w.family is WeightFamily.BETA else tuple(pair)
        return theta

    def pack(self, theta: Mapping) -> np.ndarray:
        z = []
        for name, w in self.free:
            t = theta[name]
            z.extend(np.log(t) if w.family is WeightFamily.BETA else t)
        return np.array(z, dtype=float)

    def rss(self, theta: Mapping) -> float:
        X = _assemble(self.data, self.spec, theta)
        return solve_lstsq(X, self.data.y)[1]

    def __call__(self, z) -> float:
        try:
            r = self.rss(self.unpack(z))
        except (MfnowError, np.linalg.LinAlgError, FloatingPointError):
            return math.inf
        if not math.isfinite(r):
            return math.inf
        # log scale turns the absolute simplex tolerance into a relative one
        return math.log(max(r, 1e-300))

    def simplex(self, z0: np.ndarray) -> np.ndarray:
        steps = [s for _, w in self.free for s in _SIMPLEX_STEP[w.family]]
        sim = np.tile(z0, (z0.size + 1, 1))
        for i, s in enumerate(steps):
            sim[i + 1, i] += s
        return sim


def start_grid(spec: MidasSpec) -> list[dict]:
    """Deterministic starting points.

    One grid per weight family present; variables of the same family share
    the start value, and distinct families are crossed.
    """
    families = []
    for _, w in spec.exogenous:
        if w.family.n_params and w.family not in families:
            families.append(w.family)
    starts = []
    for combo in itertools.product(*(START_GRIDS[f] for f in families)):
        by_family = dict(zip(families, combo))
        starts.append({n: by_family[w.family] for n, w in spec.exogenous if w.family.n_params})
    return starts


def fit(target: TimeSeries, exogenous: Mapping[str, TimeSeries], spec: MidasSpec,
        max_iter: int = 500, rtol: float = 1e-10) -> MidasModel:
    """Profiled nonlinear least squares.

    Each start runs Nelder-Mead until the simplex's RSS spread falls below
    ``rtol`` relative, or ``max_iter`` iterations. The lowest RSS wins, ties
    go to the lexicographically smallest parameter vector. Inference is
    plain OLS at the chosen weights.
    """
    data = prepare(target, exogenous, spec)
    design0 = _design_from(data, spec, _theta_for(spec, None))
    obj = _Objective(data, spec)
    if not obj.free:
        theta = _theta_for(spec, None)
        return _model_from(design0, ols(design0.X, design0.y), spec, target.name, theta)

    results = []
    for start in start_grid(spec):
        theta0 = {**obj.fixed, **start}
        z0 = obj.pack(theta0)
        f0 = obj(z0)
        start_rss = math.exp(f0) if math.isfinite(f0) else math.inf
        if not math.isfinite(f0):
            results.append(StartResult(start, None, math.inf, math.inf, 0, "objective not finite at start"))
            continue
        with np.errstate(all="ignore"):
            opt = optimize.minimize(
                obj, z0, method="Nelder-Mead",
                options={"maxiter": max_iter, "xatol": np.inf, "fatol": rtol,
                         "initial_simplex": obj.simplex(z0)},
            )
        if not math.isfinite(opt.fun):
            results.append(StartResult(start, None, math.inf, start_rss, int(opt.nit), "objective not finite"))
            continue
        theta_hat = obj.unpack(opt.x)
        results.append(StartResult(start, theta_hat, obj.rss(theta_hat), start_rss, int(opt.nit)))

    ok = [r for r in results if r.theta is not None]
    if not ok:
        raise FitFailed(
            "all optimizer starts failed: " + "; ".join(f"{r.start}: {r.cause}" for r in results),
            causes=[(r.start, r.cause) for r in results],
        )
    flat = lambda r: tuple(x for n in spec.names if n in r.theta for x in r.theta[n])
    best = min(ok, key=lambda r: (r.rss, flat(r)))
    theta = _theta_for(spec, best.theta)
    design = _design_from(data, spec, theta)
    try:
        res = ols(design.X, design.y)
    except MfnowError as exc:
        raise FitFailed(f"OLS at the optimum failed: {exc}", causes=[(best.start, str(exc))]) from exc
    return _model_from(design, res, spec, target.name, theta, results)


def design_row(model_spec: MidasSpec, theta: Mapping, exogenous: Mapping[str, TimeSeries],
               target_history: TimeSeries, month) -> np.ndarray:
    lags, endog = _row_inputs(to_date(month), exogenous, target_history, model_spec)
    row = [1.0] if model_spec.include_intercept else []
    for name, w in model_spec.exogenous:
        row.append(float(lags[name] @ lag_weights(w.family, theta[name], w.J)))
    row.extend(endog)
    return np.array(row, dtype=float)


def nowcast(model: MidasModel, exogenous: Mapping[str, TimeSeries], target_history: TimeSeries, month) -> float:
    """Point nowcast for ``month`` from data dated before it."""
    row = design_row(model.spec, model.theta, exogenous, target_history, month)
    return float(row @ model.beta)
