import datetime as dt
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from mfnow.series import TimeSeries, month_range

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    key = (mark.args[0], mark.args[1])
    passed = rep.passed if rep.when == "call" else (None if rep.passed else False)
    if passed is None:
        return
    _ACCEPTANCE.setdefault(key, []).append((item.name, passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), results in sorted(_ACCEPTANCE.items()):
        ok = all(p for _, p in results)
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} ({sum(p for _, p in results)}/{len(results)} checks)")
        for name, p in results:
            if not p:
                terminalreporter.write_line(f"         failed: {name}")


def beta_oracle_weights(a, b, J):
    """Normalised Beta density on the lag midpoints, via scipy."""
    u = (np.arange(J) + 0.5) / J
    w = stats.beta.pdf(u, a, b)
    return w / w.sum()


def synthetic_midas(seed, sigma, n_months=132, J=22, b0=0.1, b1=0.8, a=1.0, b=3.0):
    """Monthly target from one daily regressor with known MIDAS parameters.

    Indexing is done by hand on the raw array: the row for month ``t`` uses
    the ``J`` days ending the day before ``t``, newest first.
    """
    rng = np.random.default_rng(seed)
    day0 = dt.date(2009, 11, 1)
    first = dt.date(2010, 1, 1)
    months = month_range(first, n_months)
    last = months[-1]
    n_days = (last - day0).days + 1
    x = rng.standard_normal(n_days)
    w = beta_oracle_weights(a, b, J)
    ys = []
    for mo in months:
        end = (mo - day0).days  # index of the month's first day; window stops one day earlier
        window = x[end - J : end][::-1]
        ys.append(b0 + b1 * float(window @ w) + sigma * rng.standard_normal())
    target = TimeSeries.monthly("y", months[0], ys)
    exog = {"x": TimeSeries.daily("x", day0, x)}
    return target, exog


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
