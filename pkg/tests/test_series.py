import calendar
import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfnow.errors import (
    DivisionByZero,
    FormatError,
    FrequencyMismatch,
    InsufficientData,
    InsufficientHistory,
    MissingObservation,
)
from mfnow.series import (
    Frequency,
    TimeSeries,
    add_months,
    count_gaps,
    downsample_fill,
    fractional_change,
    interpolate_gaps,
    lag_window,
    month_end,
    read_series_csv,
    write_series_csv,
)

D = dt.date


def test_interpolate_midpoint():
    s = TimeSeries.from_pairs("x", "daily", [(D(2020, 1, 1), 100), (D(2020, 1, 2), None), (D(2020, 1, 3), 200)])
    out = interpolate_gaps(s)
    assert out.value_at(D(2020, 1, 2)) == 150.0


def test_interpolate_no_gaps_is_identity():
    s = TimeSeries.daily("x", D(2020, 1, 1), [1.0, 4.0, 2.0, 8.0])
    assert interpolate_gaps(s) == s


def test_interpolate_absent_rows_by_date_distance():
    s = TimeSeries.from_pairs("x", "daily", [(D(2020, 1, 1), 10), (D(2020, 1, 4), 40)])
    out = interpolate_gaps(s)
    assert out.date_list() == [D(2020, 1, d) for d in range(1, 5)]
    np.testing.assert_allclose(out.values, [10, 20, 30, 40])


def test_interpolate_keeps_edges_missing():
    s = TimeSeries.daily("x", D(2020, 1, 1), [np.nan, 1.0, np.nan, 3.0, np.nan])
    out = interpolate_gaps(s)
    assert np.isnan(out.values[0]) and np.isnan(out.values[-1])
    assert out.values[2] == 2.0
    assert len(out.trim()) == 3


def test_interpolate_needs_two_points():
    s = TimeSeries.daily("x", D(2020, 1, 1), [np.nan, 1.0, np.nan])
    with pytest.raises(InsufficientData):
        interpolate_gaps(s)


@st.composite
def gappy_daily(draw):
    n = draw(st.integers(3, 40))
    offsets = sorted(draw(st.sets(st.integers(0, 80), min_size=n, max_size=n)))
    vals = draw(st.lists(st.one_of(st.none(), st.floats(-1e3, 1e3)), min_size=n, max_size=n))
    vals[0] = vals[0] if vals[0] is not None else 1.0
    vals[-1] = vals[-1] if vals[-1] is not None else 2.0
    start = D(2020, 1, 1)
    return TimeSeries.from_pairs("x", "daily", [(start + dt.timedelta(days=o), v) for o, v in zip(offsets, vals)])


@given(gappy_daily())
@settings(max_examples=60, deadline=None)
def test_interpolate_idempotent(s):
    once = interpolate_gaps(s)
    assert interpolate_gaps(once) == once
    assert once.is_contiguous()
    assert not np.any(once.missing)


def test_count_gaps_matches_scan():
    s = TimeSeries.from_pairs("x", "daily", [(D(2020, 1, 1), 1), (D(2020, 1, 2), None), (D(2020, 1, 5), 3)])
    # independent scan: days in span not carrying a value
    span = [D(2020, 1, 1) + dt.timedelta(days=i) for i in range(5)]
    have = {d for d, v in s.items() if v is not None}
    assert count_gaps(s) == sum(d not in have for d in span) == 3


def test_fractional_change_constant_is_zero():
    s = TimeSeries.daily("x", D(2020, 1, 1), np.full(20, 3.5))
    out = fractional_change(s)
    assert len(out) == 13
    assert np.all(out.values == 0.0)
    assert out.start == D(2020, 1, 8)


@pytest.mark.parametrize("now,expected", [(110.0, 0.10), (90.0, -0.10)])
def test_fractional_change_values(now, expected):
    vals = [100.0] * 7 + [now]
    out = fractional_change(TimeSeries.daily("x", D(2020, 1, 1), vals))
    assert len(out) == 1
    assert out.values[0] == pytest.approx(expected, abs=1e-15)


def test_fractional_change_zero_base_names_date():
    vals = [1.0, 0.0, 1.0, 1.0, 1.0]
    with pytest.raises(DivisionByZero) as err:
        fractional_change(TimeSeries.daily("x", D(2020, 1, 1), vals), horizon_days=2)
    assert "2020-01-02" in str(err.value)


def test_fractional_change_requires_gap_free():
    s = TimeSeries.from_pairs("x", "daily", [(D(2020, 1, 1), 1), (D(2020, 1, 3), 2)])
    with pytest.raises(Exception):
        fractional_change(s, 1)


def test_downsample_single_month():
    out = downsample_fill(TimeSeries.monthly("h", D(2020, 1, 1), [1.4]))
    assert len(out) == 31
    assert np.all(out.values == 1.4)


def test_downsample_empty():
    out = downsample_fill(TimeSeries.monthly("h", D(2020, 1, 1), []))
    assert len(out) == 0


def test_downsample_day_counts_follow_calendar():
    out = downsample_fill(TimeSeries.monthly("h", D(2020, 1, 1), [1.0, 2.0]))
    counts = [int(np.sum(out.values == v)) for v in (1.0, 2.0)]
    assert counts == [calendar.monthrange(2020, 1)[1], calendar.monthrange(2020, 2)[1]] == [31, 29]


def test_downsample_missing_value():
    with pytest.raises(MissingObservation):
        downsample_fill(TimeSeries.monthly("h", D(2020, 1, 1), [1.0, np.nan]))


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=30), st.integers(2000, 2030), st.integers(1, 12))
@settings(max_examples=50, deadline=None)
def test_downsample_preserves_monthly_means(vals, year, month):
    s = TimeSeries.monthly("h", D(year, month, 1), vals)
    out = downsample_fill(s)
    for d, v in s.items():
        seg = out.between(d, add_months(d, 1)).values
        assert np.all(seg == v)
        assert seg.mean() == pytest.approx(v, abs=1e-12)


def test_lag_window_examples():
    s = TimeSeries.daily("x", D(2020, 1, 1), np.arange(1, 31, dtype=float))
    assert list(lag_window(s, D(2020, 1, 30), 3)) == [30, 29, 28]
    assert list(lag_window(s, D(2020, 1, 30), 1)) == [30]
    w = lag_window(s, D(2020, 1, 30), 10)
    assert np.all(np.diff(w) < 0)


def test_lag_window_uses_latest_at_or_before_reference():
    s = TimeSeries.daily("x", D(2020, 1, 1), np.arange(1, 11, dtype=float))
    assert list(lag_window(s, D(2020, 3, 1), 2)) == [10, 9]


def test_lag_window_shortfall():
    s = TimeSeries.daily("x", D(2020, 1, 1), np.arange(1, 6, dtype=float))
    with pytest.raises(InsufficientHistory) as err:
        lag_window(s, D(2020, 1, 5), 8)
    assert err.value.shortfall == 3


@given(st.integers(1, 20), st.integers(0, 30))
@settings(max_examples=40, deadline=None)
def test_lag_window_left_extension_invariant(J, extra):
    base = np.arange(40, dtype=float) ** 1.5
    s = TimeSeries.daily("x", D(2020, 2, 1), base)
    ext = TimeSeries.daily("x", D(2020, 2, 1) - dt.timedelta(days=extra), np.r_[np.full(extra, -7.0), base])
    ref = D(2020, 3, 5)
    w = lag_window(s, ref, J)
    assert w.size == J
    np.testing.assert_array_equal(w, lag_window(ext, ref, J))


def test_monthly_grid_enforced():
    with pytest.raises(FrequencyMismatch):
        TimeSeries.from_pairs("h", "monthly", [(D(2020, 1, 15), 1.0)])


def test_month_helpers():
    assert month_end(D(2020, 2, 10)) == D(2020, 2, 29)
    assert add_months(D(2020, 12, 5), 1) == D(2021, 1, 1)
    assert add_months(D(2020, 1, 1), -13) == D(2018, 12, 1)


def test_csv_roundtrip(tmp_path):
    s = TimeSeries.from_pairs("x", "daily", [(D(2020, 1, 1), 0.1), (D(2020, 1, 2), None), (D(2020, 1, 6), -2.5)])
    p = tmp_path / "x.csv"
    write_series_csv(s, p)
    assert p.read_text().splitlines()[2] == "2020-01-02,"
    assert read_series_csv(p, "x", "daily") == s


def test_csv_mid_month_monthly_file(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("date,value\n2020-01-01,1.0\n2020-02-15,2.0\n")
    with pytest.raises(FrequencyMismatch) as err:
        read_series_csv(p, "h", "monthly")
    assert "h.csv:3" in str(err.value)


@pytest.mark.parametrize(
    "body,line",
    [
        ("date,value\n2020-01-01,abc\n", 2),
        ("date,value\n2020-01-01,1\n2020-13-01,2\n", 3),
        ("date,value\n2020-01-02,1\n2020-01-01,2\n", 3),
        ("when,value\n", 1),
        ("date,value\n2020-01-01,1,2\n", 2),
    ],
)
def test_csv_format_errors_carry_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(FormatError) as err:
        read_series_csv(p, "x", "daily")
    assert err.value.line == line
    assert "bad.csv" in str(err.value)


def test_series_is_immutable():
    s = TimeSeries.daily("x", D(2020, 1, 1), [1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0
    assert s.frequency is Frequency.DAILY
