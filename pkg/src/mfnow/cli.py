"""``mfnow`` command line: diagnose | fit | nowcast | backtest | compare.

Exit status is 0 on success, 1 on invalid input or configuration and 2 when
a computation cannot be carried out.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import SUMMARY_COLUMNS, PipelineConfig, ingest
from .errors import ComputationError, ConfigError, FormatError, MfnowError, ValidationError
from .evaluation import MetricReport, compare, rolling_backtest
from .forecasters import Ar1Forecaster, ExternalForecaster, MidasForecaster, load_external_forecasts
from .midas import MidasModel, fit, nowcast
from .series import Frequency, TimeSeries, add_months, read_series_csv, to_date

SUBCOMMANDS = ("diagnose", "fit", "nowcast", "backtest", "compare")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfnow", description="Mixed-frequency nowcasting toolkit")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)
    for name, help_ in (
        ("diagnose", "ACF, decomposition, correlation matrix and VIF"),
        ("fit", "fit the MIDAS regression and write the model file"),
        ("nowcast", "nowcast one month from a fitted model"),
        ("backtest", "rolling-window evaluation over the evaluation span"),
        ("compare", "apply the 5%% outperformance rule to two models"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=(name != "compare"), help="pipeline config (JSON)")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--format", dest="formats", help="comma-separated subset of json,csv,text")
        p.add_argument("--in-sample", action="store_true", help="fit MIDAS on the full span, evaluation included")
        p.add_argument("--intercept", action="store_true", help="benchmark AR(1) with an intercept")
        p.add_argument("--k", type=int, help="predictor count for adjusted R-squared")
        if name == "nowcast":
            p.add_argument("--month", help="month to nowcast (YYYY-MM-01)")
            p.add_argument("--model", help="model JSON written by 'fit'")
        if name == "backtest":
            p.add_argument("--forecaster", choices=("midas", "benchmark", "external"))
        if name == "compare":
            p.add_argument("--candidate", help="metric JSON or prediction CSV")
            p.add_argument("--reference", help="metric JSON or prediction CSV")
            p.add_argument("--actuals", help="actuals CSV (date,value) when comparing predictions")
    return parser


# output helpers


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _g(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    return "nan" if math.isnan(v) else f"{v:.6g}"


class Output:
    def __init__(self, directory: Path, formats):
        self.directory = Path(directory)
        self.formats = list(formats)
        self.written = []

    def _path(self, name):
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.directory / name
        self.written.append(p)
        return p

    def json(self, name, obj):
        if "json" in self.formats:
            self._path(name).write_text(dumps(obj))

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            with self._path(name).open("w", newline="") as handle:
                w = csv.writer(handle, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])

    def text(self, name, text):
        sys.stdout.write(text)
        if "text" in self.formats:
            self._path(name).write_text(text)


def _output(config: PipelineConfig, args) -> Output:
    directory = args.out or config.resolve(config.output.directory)
    formats = config.output.formats
    if args.formats:
        formats = [f.strip() for f in args.formats.split(",") if f.strip()]
        bad = [f for f in formats if f not in ("json", "csv", "text")] or ([] if formats else ["<empty>"])
        if bad:
            raise ConfigError(f"--format: unknown format(s) {', '.join(bad)}")
    return Output(Path(directory), formats)


def _series_rows(series: TimeSeries, label=None):
    label = label or series.name
    return [(label, str(d), v) for d, v in series.items()]


def _summary_text(rows) -> str:
    head = f"{'':<24}" + "".join(f"{c:>12}" for c in SUMMARY_COLUMNS) + f"{'gaps':>8}"
    lines = ["Summary statistics", head]
    for r in rows:
        lines.append(f"{r['series']:<24}" + "".join(f"{_g(r[c]):>12}" for c in SUMMARY_COLUMNS) + f"{r['gaps_filled']:>8}")
    return "\n".join(lines) + "\n"


# subcommands


def cmd_diagnose(config: PipelineConfig, args) -> int:
    data = ingest(config)
    out = _output(config, args)
    dc = config.diagnostics
    target = data.target
    result = {"summary": data.summary}
    text = [_summary_text(data.summary)]

    a = diag.acf(target, dc.max_lag)
    result["acf"] = {"series": target.name, **a.to_dict()}
    out.csv("acf.csv", ["lag", "coefficient", "band_low", "band_high"],
            [(k, float(c), -a.confidence_band, a.confidence_band) for k, c in enumerate(a.coefficients)])
    text.append(f"\nAutocorrelation of {target.name} (n={a.n}, band +/-{_g(a.confidence_band)})\n")
    text.extend(f"  lag {k:>3}: {_g(c)}\n" for k, c in enumerate(a.coefficients))

    dec = diag.seasonal_decompose(target, dc.period)
    rows = dec.to_rows(target)
    result["decomposition"] = {
        "period": dec.period,
        "components": {
            comp: [{"date": str(d), "value": v} for c, d, v in rows if c == comp]
            for comp in ("observed", "trend", "seasonal", "residual")
        },
    }
    out.csv("decomposition.csv", ["series", "date", "value"], [(c, str(d), v) for c, d, v in rows])
    seas = dec.seasonal.values[: dec.period]
    text.append(f"\nSeasonal component (period {dec.period}): " + " ".join(_g(v) for v in seas) + "\n")

    names = list(data.exogenous)
    if len(names) >= 2:
        corr = diag.correlation_matrix([data.exogenous[n] for n in names])
        result["correlation"] = {"names": names, "matrix": corr.tolist()}
        out.csv("correlation.csv", ["row", "column", "value"],
                [(names[i], names[j], float(corr[i, j])) for i in range(len(names)) for j in range(len(names))])
        text.append("\nCorrelation matrix\n" + f"{'':<24}" + "".join(f"{n[:11]:>12}" for n in names) + "\n")
        for i, n in enumerate(names):
            text.append(f"{n:<24}" + "".join(f"{_g(v):>12}" for v in corr[i]) + "\n")
    if names:
        common, block = diag.align([data.exogenous[n] for n in names])
        design = np.column_stack([np.ones(common.size), block])
        v = diag.vif(design, ["const"] + names)
        result["vif"] = v
        out.csv("vif.csv", ["feature", "vif"], list(v.items()))
        text.append("\nVIF\n" + "".join(f"  {k:<24}{_g(x):>10}\n" for k, x in v.items()))
    out.csv("summary.csv", ["series", *SUMMARY_COLUMNS, "gaps_filled"],
            [[r["series"], *(r[c] for c in SUMMARY_COLUMNS), r["gaps_filled"]] for r in data.summary])
    out.json("diagnostics.json", result)
    out.text("diagnostics.txt", "".join(text))
    return 0


def _fit(config, data):
    spec = config.midas_spec()
    return fit(data.target, data.exogenous, spec)


def cmd_fit(config: PipelineConfig, args) -> int:
    data = ingest(config)
    out = _output(config, args)
    model = _fit(config, data)
    out.json("model.json", model.to_dict())
    out.csv("residuals.csv", ["series", "date", "value"],
            _series_rows(model.fitted, "fitted") + _series_rows(model.residuals, "residual"))
    out.csv("coefficients.csv", ["name", "coef", "std_err", "t", "p_value", "ci_low", "ci_high"],
            [(c["name"], c["coef"], c["std_err"], c["t"], c["p_value"], c["ci_low"], c["ci_high"])
             for c in model.to_dict()["coefficients"]])
    out.text("model.txt", model.summary_table())
    return 0


def _load_model(path) -> MidasModel:
    path = Path(path)
    try:
        return MidasModel.from_dict(json.loads(path.read_text()))
    except OSError as exc:
        raise FormatError(f"cannot read model file: {exc.strerror}", path=path) from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid model file: {exc}", path=path) from None


def cmd_nowcast(config: PipelineConfig, args) -> int:
    data = ingest(config)
    out = _output(config, args)
    model_path = args.model or (config.resolve(config.nowcast.model) if config.nowcast.model else None)
    model = _load_model(model_path) if model_path else _fit(config, data)
    if args.month or config.nowcast.month:
        month = to_date(args.month or config.nowcast.month)
        if month.day != 1:
            raise ValidationError(f"nowcast month {month} must be the first day of a month")
    else:
        month = add_months(data.target.end, 1)
    history = data.target.before(month)
    point = nowcast(model, data.exogenous, history, month)
    actual = data.target.value_at(month) if data.target.has(month) else None
    result = {"target": data.target.name, "month": str(month), "point": point, "actual": actual,
              "model": str(model_path) if model_path else None}
    out.json("nowcast.json", result)
    out.csv("nowcast.csv", ["date", "point", "actual"], [(str(month), point, actual)])
    out.text("nowcast.txt", f"Nowcast of {data.target.name} for {month}: {_g(point)}"
             + (f" (actual {_g(actual)})" if actual is not None else "") + "\n")
    return 0


def cmd_backtest(config: PipelineConfig, args) -> int:
    data = ingest(config)
    out = _output(config, args)
    ev = config.evaluation
    k = args.k if args.k is not None else ev.k
    if k is None:
        raise ConfigError("backtest needs the predictor count k (evaluation.k or --k)")
    if ev.eval_start is None:
        raise ConfigError("backtest needs evaluation.eval_start")
    kind = args.forecaster or ev.forecaster
    in_sample = args.in_sample or ev.in_sample
    if kind == "benchmark":
        forecaster = Ar1Forecaster(intercept=args.intercept or ev.benchmark_intercept)
    elif kind == "external":
        if not ev.external_path:
            raise ConfigError("external forecaster needs evaluation.external_path")
        forecaster = ExternalForecaster.from_file(config.resolve(ev.external_path))
    else:
        spec = config.midas_spec()
        model = fit(data.target, data.exogenous, spec) if in_sample else None
        forecaster = MidasForecaster(spec, model)
    res = rolling_backtest(forecaster, data.target, data.exogenous, ev.eval_start,
                           int(ev.eval_months), int(ev.context_days), int(k))
    rows = _series_rows(res.actuals, "actual") + _series_rows(res.predictions, "predicted")
    for r in res.records:
        for level, q in (r.quantiles or {}).items():
            rows.append((f"q{level:g}", str(r.date), q))
    result = {
        "forecaster": forecaster.name,
        "mode": "in-sample" if (in_sample and kind == "midas") else "rolling",
        "eval_start": str(res.actuals.start),
        "eval_end": str(res.actuals.end),
        "context_days": int(ev.context_days),
        "metrics": res.report.to_dict(),
        "predictions": [{"date": str(r.date), "point": r.point,
                         "quantiles": {f"q{l:g}": v for l, v in (r.quantiles or {}).items()} or None}
                        for r in res.records],
    }
    out.json("backtest.json", result)
    out.json("metrics.json", res.report.to_dict())
    out.csv("predictions.csv", ["series", "date", "value"], rows)
    out.text("backtest.txt", f"Backtest {res.actuals.start}..{res.actuals.end} ({result['mode']})\n" + res.report.table())
    return 0


def _report_from(path, actuals: TimeSeries | None, k, name) -> MetricReport:
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise FormatError(f"cannot read metrics: {exc.strerror}", path=path) from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno) from None
        rep = MetricReport.from_dict(raw.get("metrics", raw))
        return rep if rep.name else dataclasses.replace(rep, name=name)
    if actuals is None:
        raise ConfigError(f"{path}: comparing prediction files needs an actuals CSV")
    if k is None:
        raise ConfigError(f"{path}: comparing prediction files needs k (--k or compare.k_*)")
    header = path.read_text().split("\n", 1)[0].strip().lower()
    if header.startswith("date,point"):
        pts = {r.date: r.point for r in load_external_forecasts(path)}
    else:
        s = read_series_csv(path, name, Frequency.MONTHLY)
        pts = {d: v for d, v in s.items() if v is not None}
    common = [d for d, v in actuals.items() if v is not None and d in pts]
    if not common:
        raise ValidationError(f"{path}: no dates in common with the actuals")
    return MetricReport.compute([actuals.value_at(d) for d in common], [pts[d] for d in common], int(k), name)


def cmd_compare(config: PipelineConfig, args) -> int:
    cc = config.compare
    cand = args.candidate or (config.resolve(cc.candidate) if cc.candidate else None)
    ref = args.reference or (config.resolve(cc.reference) if cc.reference else None)
    if not cand or not ref:
        raise ConfigError("compare needs a candidate and a reference (--candidate/--reference or compare section)")
    act_path = args.actuals or (config.resolve(cc.actuals) if cc.actuals else None)
    actuals = read_series_csv(act_path, "actual", Frequency.MONTHLY) if act_path else None
    kc = args.k if args.k is not None else cc.k_candidate
    kr = args.k if args.k is not None else cc.k_reference
    c = _report_from(cand, actuals, kc, Path(cand).stem)
    r = _report_from(ref, actuals, kr, Path(ref).stem)
    verdict = compare(c, r)
    out = _output(config, args)
    out.json("verdict.json", verdict.to_dict())
    out.csv("verdict.csv", ["metric", "candidate", "reference", "ratio", "outperforms"],
            [(m, v.candidate, v.reference, v.ratio, str(v.outperforms).lower()) for m, v in verdict.per_metric.items()])
    out.text("verdict.txt", verdict.table())
    return 0


COMMANDS = {"diagnose": cmd_diagnose, "fit": cmd_fit, "nowcast": cmd_nowcast,
            "backtest": cmd_backtest, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        sys.stderr.write(parser.format_usage())
        sys.stderr.write(f"mfnow: error: {exc}\n")
        return 1
    try:
        if args.config:
            config = PipelineConfig.load(args.config)
        else:
            config = PipelineConfig.from_dict({})
        return COMMANDS[args.command](config, args)
    except ValidationError as exc:
        sys.stderr.write(f"mfnow {args.command}: invalid input: {exc}\n")
        return 1
    except ComputationError as exc:
        sys.stderr.write(f"mfnow {args.command}: computation failed: {exc}\n")
        return 2
    except MfnowError as exc:
        sys.stderr.write(f"mfnow {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
