import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from mfnow.errors import DegenerateVariance, FormatError, InsufficientData, InvalidQuantiles, MissingObservation
from mfnow.forecasters import (
    Ar1Forecaster,
    Ar1Model,
    ExternalForecaster,
    ForecastRecord,
    ar1_fit,
    ar1_predict,
    load_external_forecasts,
    write_external_forecasts,
)
from mfnow.series import TimeSeries

D = dt.date


def monthly(values, start=D(2015, 1, 1)):
    return TimeSeries.monthly("y", start, values)


def test_ar1_unit_root_and_doubling():
    assert ar1_fit(monthly([1.0, 1.0, 1.0, 1.0])).beta == pytest.approx(1.0, abs=1e-12)
    assert ar1_fit(monthly([1.0, 2.0, 4.0, 8.0])).beta == pytest.approx(2.0, abs=1e-12)


def test_ar1_predict_example():
    assert ar1_predict(Ar1Model(0.935, 10), 2.0) == pytest.approx(1.87, abs=1e-12)


def test_ar1_minimises_squared_error(rng):
    y = rng.standard_normal(30).cumsum()
    beta = ar1_fit(monthly(y)).beta
    grid = np.linspace(beta - 0.01, beta + 0.01, 201)
    sse = [np.sum((y[1:] - b * y[:-1]) ** 2) for b in grid]
    assert abs(grid[int(np.argmin(sse))] - beta) <= 1e-4


@given(st.floats(0.01, 100), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_ar1_scale_invariant(c, seed):
    y = np.random.default_rng(seed).standard_normal(20) + 3
    assert ar1_fit(monthly(c * y)).beta == pytest.approx(ar1_fit(monthly(y)).beta, rel=1e-9)


def test_ar1_residuals_orthogonal_to_lag(rng):
    y = rng.standard_normal(50)
    b = ar1_fit(monthly(y)).beta
    assert abs((y[1:] - b * y[:-1]) @ y[:-1]) < 1e-9


def test_ar1_with_intercept_matches_lstsq(rng):
    y = rng.standard_normal(40) + 5
    m = ar1_fit(monthly(y), intercept=True)
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones(39), y[:-1]]), y[1:], rcond=None)
    assert (m.intercept, m.beta) == pytest.approx(tuple(coef), rel=1e-10)


def test_ar1_skips_broken_pairs():
    y = TimeSeries.from_pairs("y", "monthly", [(D(2020, 1, 1), 1.0), (D(2020, 2, 1), 2.0), (D(2020, 3, 1), None),
                                                (D(2020, 4, 1), 3.0), (D(2020, 5, 1), 6.0)])
    # pairs (1,2) and (3,6)
    assert ar1_fit(y).beta == pytest.approx((2 + 18) / (1 + 9))


def test_ar1_errors():
    with pytest.raises(InsufficientData):
        ar1_fit(monthly([1.0, 2.0]))
    with pytest.raises(DegenerateVariance):
        ar1_fit(monthly([0.0, 0.0, 0.0]))


def test_ar1_forecaster_uses_previous_month():
    y = monthly([1.0, 2.0, 4.0])
    rec = Ar1Forecaster().forecast(D(2015, 4, 1), y)
    assert rec.point == pytest.approx(8.0)
    with pytest.raises(MissingObservation):
        Ar1Forecaster().forecast(D(2015, 6, 1), y)


def test_record_validation():
    rec = ForecastRecord("2020-01-01", 1.0, {0.9: 2.0, 0.1: 0.0})
    assert list(rec.quantiles) == [0.1, 0.9]
    with pytest.raises(InvalidQuantiles):
        ForecastRecord(D(2020, 1, 1), 1.0, {0.1: 2.0, 0.9: 0.0})
    with pytest.raises(InvalidQuantiles):
        ForecastRecord(D(2020, 1, 1), float("nan"))


def test_load_fixture_file():
    recs = load_external_forecasts(FIXTURES / "external_forecasts.csv")
    assert len(recs) == 24
    assert recs[0].date == D(2019, 6, 1) and recs[-1].date == D(2021, 5, 1)
    assert set(recs[0].quantiles) == {0.1, 0.5, 0.9}


def test_load_empty_file(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    assert load_external_forecasts(p) == []


def test_load_point_only_and_sorted(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("date,point\n2020-02-01,2.0\n2020-01-01,1.0\n")
    recs = load_external_forecasts(p)
    assert [r.point for r in recs] == [1.0, 2.0]
    assert recs[0].quantiles is None


@pytest.mark.parametrize(
    "body,line",
    [
        ("date,point\n2020-01-01,1\n2020-01-01,2\n", 3),
        ("date,point\n2020-01-15,1\n", 2),
        ("date,point\n2020-01-01,x\n", 2),
        ("day,point\n", 1),
        ("date,point,q1.5\n", 1),
    ],
)
def test_load_format_errors(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(FormatError) as err:
        load_external_forecasts(p)
    assert err.value.line == line


def test_load_non_monotone_quantiles(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("date,point,q0.1,q0.9\n2020-01-01,1,2,0\n")
    with pytest.raises(InvalidQuantiles, match="q.csv:2"):
        load_external_forecasts(p)


def test_roundtrip(tmp_path):
    recs = [ForecastRecord(D(2020, m, 1), 0.1 * m, {0.1: 0.0, 0.9: 2.0}) for m in (3, 1, 2)]
    p = tmp_path / "r.csv"
    write_external_forecasts(recs, p)
    assert load_external_forecasts(p) == sorted(recs, key=lambda r: r.date)


def test_external_forecaster_replays_and_reports_gaps():
    f = ExternalForecaster([ForecastRecord(D(2020, 1, 1), 1.5)])
    assert f.forecast(D(2020, 1, 1)).point == 1.5
    with pytest.raises(MissingObservation):
        f.forecast(D(2020, 2, 1))
