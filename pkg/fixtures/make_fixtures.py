"""Regenerate the synthetic data corpus in this directory.

Daily market-style series on business days (with gaps, so interpolation is
exercised) and a monthly target generated from a known MIDAS process.
Run from anywhere: ``python fixtures/make_fixtures.py``.
"""

import datetime as dt
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
RNG = np.random.default_rng(20240601)

DAY0 = dt.date(2010, 1, 1)
DAY1 = dt.date(2021, 6, 30)
MONTH0 = dt.date(2010, 6, 1)
N_MONTHS = 133  # 2010-06 .. 2021-06


def business_days():
    d, out = DAY0, []
    while d <= DAY1:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def write_csv(path, rows, header=("date", "value")):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else (f"{v:.6f}" if isinstance(v, float) else str(v)) for v in row) + "\n")


def main():
    days = business_days()
    n = len(days)
    oil = 80.0 * np.exp(np.cumsum(0.018 * RNG.standard_normal(n)))
    spread = 1.0 + np.cumsum(0.01 * RNG.standard_normal(n))
    spread = 1.5 + 0.5 * np.tanh(spread - 1.0)  # keep strictly positive
    fx = 0.85 * np.exp(np.cumsum(0.004 * RNG.standard_normal(n)))
    series = {"OIL": oil, "SPREAD": spread, "USD_EUR": fx}
    # random holidays and a few blank cells
    holes = RNG.choice(n, size=40, replace=False)
    blanks = set(RNG.choice(n, size=15, replace=False))
    keep = np.setdiff1d(np.arange(n), holes)
    for name, x in series.items():
        rows = [(days[i].isoformat(), None if i in blanks and 0 < i < n - 1 else float(x[i])) for i in keep]
        write_csv(HERE / f"{name.lower()}.csv", rows)

    # monthly target from weekly fractional changes on the calendar grid
    cal = [DAY0 + dt.timedelta(days=i) for i in range((DAY1 - DAY0).days + 1)]
    def on_calendar(x):
        ci = np.array([(d - DAY0).days for d in days])
        return np.interp(np.arange(len(cal)), ci, x)
    fc = {}
    for name, x in series.items():
        c = on_calendar(x)
        fc[name] = np.r_[np.full(7, np.nan), (c[7:] - c[:-7]) / c[:-7]]
    J = 22
    u = (np.arange(J) + 0.5) / J
    w = (1 - u) ** 2
    w /= w.sum()
    beta = {"OIL": 4.0, "SPREAD": 2.0, "USD_EUR": -3.0}
    y = [1.6]
    months = [MONTH0]
    for i in range(1, N_MONTHS):
        m = months[-1]
        nxt = dt.date(m.year + (m.month == 12), m.month % 12 + 1, 1)
        months.append(nxt)
        ref = (nxt - dt.timedelta(days=1) - DAY0).days
        val = 0.1 + 0.9 * y[-1]
        for name, b in beta.items():
            window = fc[name][ref - J + 1 : ref + 1][::-1]
            val += b * float(window @ w)
        val += 0.12 * RNG.standard_normal()
        y.append(val)
    write_csv(HERE / "hicp.csv", [(d.isoformat(), float(v)) for d, v in zip(months, y)])

    # an external probabilistic forecaster over the evaluation span
    ev = [d for d in months if dt.date(2019, 6, 1) <= d <= dt.date(2021, 5, 1)]
    rows = []
    for d in ev:
        actual = y[months.index(d)]
        point = actual + 0.1 * RNG.standard_normal()
        rows.append((d.isoformat(), float(point), float(point - 0.3), float(point), float(point + 0.3)))
    write_csv(HERE / "external_forecasts.csv", rows, header=("date", "point", "q0.1", "q0.5", "q0.9"))


if __name__ == "__main__":
    main()
