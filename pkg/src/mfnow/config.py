"""Pipeline configuration (one JSON file per experiment) and data ingestion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, EmptySeries, FrequencyMismatch
from .midas import DEFAULT_J, LagWeightSpec, MidasSpec, WeightFamily
from .series import (
    Frequency,
    TimeSeries,
    count_gaps,
    fractional_change,
    interpolate_gaps,
    read_series_csv,
    to_date,
)

FORMATS = ("json", "csv", "text")
FORECASTERS = ("midas", "benchmark", "external")


def _build(cls, raw: Any, section: str):
    if raw is None:
        raw = {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"config section {section!r}: unknown keys {', '.join(unknown)}")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"config section {section!r}: {exc}") from None


@dataclass
class TargetConfig:
    path: str
    name: str = "target"
    frequency: str = "monthly"


@dataclass
class ExogenousConfig:
    name: str
    path: str
    transform: str = "none"
    horizon_days: int = 7
    family: str | None = None
    J: int | None = None

    def __post_init__(self):
        if self.transform not in ("none", "fractional_change"):
            raise ConfigError(f"exogenous {self.name!r}: transform must be 'none' or 'fractional_change'")
        if int(self.horizon_days) < 1:
            raise ConfigError(f"exogenous {self.name!r}: horizon_days must be positive")


@dataclass
class MidasConfig:
    family: str = "beta"
    J: int = DEFAULT_J
    endogenous_lags: int = 1
    intercept: bool = True

    def __post_init__(self):
        WeightFamily.parse(self.family)
        if int(self.J) < 1:
            raise ConfigError("midas.J must be at least 1")
        if int(self.endogenous_lags) < 0:
            raise ConfigError("midas.endogenous_lags must be non-negative")


@dataclass
class EvaluationConfig:
    eval_start: str | None = None
    eval_months: int = 24
    context_days: int = 2400
    k: int | None = None
    in_sample: bool = False
    forecaster: str = "midas"
    external_path: str | None = None
    benchmark_intercept: bool = False

    def __post_init__(self):
        if int(self.eval_months) < 1:
            raise ConfigError("evaluation.eval_months must be at least 1")
        if int(self.context_days) < 1:
            raise ConfigError("evaluation.context_days must be at least 1")
        if self.forecaster not in FORECASTERS:
            raise ConfigError(f"evaluation.forecaster must be one of {', '.join(FORECASTERS)}")
        if self.eval_start is not None:
            try:
                to_date(self.eval_start)
            except Exception:
                raise ConfigError(f"evaluation.eval_start {self.eval_start!r} is not an ISO date") from None


@dataclass
class DiagnosticsConfig:
    max_lag: int = 20
    period: int = 12


@dataclass
class NowcastConfig:
    month: str | None = None
    model: str | None = None


@dataclass
class CompareConfig:
    candidate: str | None = None
    reference: str | None = None
    actuals: str | None = None
    k_candidate: int | None = None
    k_reference: int | None = None


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: list(FORMATS))

    def __post_init__(self):
        if isinstance(self.formats, str):
            self.formats = [f.strip() for f in self.formats.split(",") if f.strip()]
        if not self.formats:
            raise ConfigError("output.formats must not be empty")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"output.formats: unknown format(s) {', '.join(bad)}")


@dataclass
class PipelineConfig:
    target: TargetConfig | None = None
    exogenous: list = field(default_factory=list)
    midas: MidasConfig = field(default_factory=MidasConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    nowcast: NowcastConfig = field(default_factory=NowcastConfig)
    compare: CompareConfig = field(default_factory=CompareConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, raw: Mapping, base_dir=None) -> "PipelineConfig":
        if not isinstance(raw, Mapping):
            raise ConfigError("config must be a JSON object")
        known = {"target", "exogenous", "midas", "evaluation", "diagnostics", "nowcast", "compare", "output"}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
        target = _build(TargetConfig, raw["target"], "target") if raw.get("target") is not None else None
        exo = raw.get("exogenous", [])
        if not isinstance(exo, list):
            raise ConfigError("config section 'exogenous' must be a list")
        exogenous = [_build(ExogenousConfig, e, f"exogenous[{i}]") for i, e in enumerate(exo)]
        names = [e.name for e in exogenous]
        if len(set(names)) != len(names):
            raise ConfigError(f"exogenous names must be unique: {names}")
        for e in exogenous:
            if not e.path:
                raise ConfigError(f"exogenous {e.name!r}: path must not be empty")
        if target is not None and not target.path:
            raise ConfigError("target.path must not be empty")
        return cls(
            target=target,
            exogenous=exogenous,
            midas=_build(MidasConfig, raw.get("midas"), "midas"),
            evaluation=_build(EvaluationConfig, raw.get("evaluation"), "evaluation"),
            diagnostics=_build(DiagnosticsConfig, raw.get("diagnostics"), "diagnostics"),
            nowcast=_build(NowcastConfig, raw.get("nowcast"), "nowcast"),
            compare=_build(CompareConfig, raw.get("compare"), "compare"),
            output=_build(OutputConfig, raw.get("output"), "output"),
            base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
        )

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def midas_spec(self, names=None) -> MidasSpec:
        terms = []
        for e in self.exogenous:
            if names is not None and e.name not in names:
                continue
            terms.append((e.name, LagWeightSpec(e.family or self.midas.family, e.J or self.midas.J)))
        return MidasSpec(tuple(terms), int(self.midas.endogenous_lags), bool(self.midas.intercept))


SUMMARY_COLUMNS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")


def describe(values) -> dict:
    """count / mean / sample std / min / quartiles / max of the observed values."""
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        return {c: (0 if c == "count" else None) for c in SUMMARY_COLUMNS}
    q = np.percentile(x, [25, 50, 75])
    return {
        "count": int(x.size),
        "mean": float(x.mean()),
        "std": float(x.std(ddof=1)) if x.size > 1 else None,
        "min": float(x.min()),
        "25%": float(q[0]),
        "50%": float(q[1]),
        "75%": float(q[2]),
        "max": float(x.max()),
    }


@dataclass(frozen=True)
class Dataset:
    target: TimeSeries
    exogenous: dict
    raw: dict
    summary: list  # list of dicts, one per series
    gaps_filled: dict


def ingest(config: PipelineConfig) -> Dataset:
    """Read, grid-check, interpolate and transform every configured series."""
    if config.target is None:
        raise ConfigError("config has no 'target' section")
    tc = config.target
    if Frequency.parse(tc.frequency) is not Frequency.MONTHLY:
        raise FrequencyMismatch(f"target {tc.name!r}: only monthly targets are supported")
    path = config.resolve(tc.path)
    target = read_series_csv(path, tc.name, Frequency.MONTHLY).trim()
    if not len(target):
        raise EmptySeries(f"{path}: target {tc.name!r} has no observations")
    raw = {tc.name: target}
    exogenous, gaps = {}, {}
    for e in config.exogenous:
        p = config.resolve(e.path)
        s = read_series_csv(p, e.name, Frequency.DAILY)
        if not np.any(~s.missing):
            raise EmptySeries(f"{p}: series {e.name!r} has no observations")
        raw[e.name] = s
        gaps[e.name] = count_gaps(s)
        filled = interpolate_gaps(s).trim()
        if e.transform == "fractional_change":
            filled = fractional_change(filled, int(e.horizon_days))
        exogenous[e.name] = filled
    summary = []
    for name, s in raw.items():
        row = {"series": name, **describe(s.values)}
        row["gaps_filled"] = gaps.get(name, 0)
        summary.append(row)
    return Dataset(target, exogenous, raw, summary, gaps)
