import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mfnow.diagnostics import acf, correlation_matrix, seasonal_decompose, vif
from mfnow.errors import DegenerateVariance, ExactCollinearity, InsufficientData
from mfnow.series import TimeSeries

D = dt.date


def test_acf_lag_zero_is_one(rng):
    a = acf(rng.standard_normal(50), 10)
    assert a.coefficients[0] == 1.0
    assert np.all(np.abs(a.coefficients) <= 1.0)
    assert a.confidence_band == pytest.approx(1.96 / np.sqrt(50), rel=1e-3)


def test_acf_white_noise_coverage():
    # frozen seeds 0..99; aggregate coverage 0.9525 computed offline
    inside = total = 0
    for seed in range(100):
        a = acf(np.random.default_rng(seed).standard_normal(500), 20)
        c = np.abs(a.coefficients[1:]) <= a.confidence_band
        inside += int(c.sum())
        total += c.size
    assert inside / total >= 0.95


def test_acf_alternating_closed_form():
    x = np.tile([1.0, -1.0], 50)
    a = acf(x, 2)
    assert a.coefficients[1] == pytest.approx(-(100 - 1) / 100, abs=1e-12)
    assert a.coefficients[2] == pytest.approx((100 - 2) / 100, abs=1e-12)


def test_acf_matches_direct_formula(rng):
    x = rng.standard_normal(30).cumsum()
    a = acf(x, 5)
    d = x - x.mean()
    for k in range(1, 6):
        assert a.coefficients[k] == pytest.approx(sum(d[t] * d[t - k] for t in range(k, 30)) / (d @ d), abs=1e-12)


def test_acf_too_short():
    with pytest.raises(InsufficientData):
        acf(np.arange(5.0), 4)


@given(arrays(float, 40, elements=st.floats(-10, 10)), st.floats(0.01, 100), st.floats(-100, 100))
@settings(max_examples=60, deadline=None)
def test_acf_affine_invariance(x, a, b):
    if np.std(x) < 1e-3:
        return
    r1 = acf(x, 5).coefficients
    r2 = acf(a * x + b, 5).coefficients
    np.testing.assert_allclose(r1, r2, atol=1e-8)


def monthly(values, start=D(2010, 1, 1)):
    return TimeSeries.monthly("h", start, values)


def test_decompose_linear_has_no_seasonality():
    t = np.arange(48.0)
    dec = seasonal_decompose(monthly(2.0 + 0.3 * t))
    assert np.max(np.abs(dec.seasonal.values)) < 1e-9
    ok = ~np.isnan(dec.trend.values)
    np.testing.assert_allclose(dec.trend.values[ok], (2.0 + 0.3 * t)[ok], atol=1e-9)
    assert np.sum(np.isnan(dec.trend.values)) == 12


def test_decompose_recovers_sinusoid():
    t = np.arange(60.0)
    season = np.sin(2 * np.pi * t / 12)
    dec = seasonal_decompose(monthly(1.0 + 0.05 * t + season))
    np.testing.assert_allclose(dec.seasonal.values, season, atol=1e-6)
    res = dec.residual.values[~np.isnan(dec.residual.values)]
    assert np.max(np.abs(res)) < 1e-6


def test_decompose_constant():
    dec = seasonal_decompose(monthly(np.full(36, 4.2)))
    ok = ~np.isnan(dec.trend.values)
    np.testing.assert_allclose(dec.trend.values[ok], 4.2, atol=1e-12)
    assert np.max(np.abs(dec.seasonal.values)) < 1e-12
    assert np.max(np.abs(dec.residual.values[ok])) < 1e-12


@given(arrays(float, st.integers(24, 60), elements=st.floats(-50, 50)))
@settings(max_examples=50, deadline=None)
def test_decompose_reconstruction(x):
    s = monthly(x)
    dec = seasonal_decompose(s)
    tot = dec.trend.values + dec.seasonal.values + dec.residual.values
    ok = ~np.isnan(tot)
    np.testing.assert_allclose(tot[ok], x[ok], atol=1e-9)
    seas = dec.seasonal.values
    np.testing.assert_allclose(seas[12:], seas[:-12], atol=1e-12)
    assert abs(seas[:12].sum()) < 1e-9


def test_decompose_too_short():
    with pytest.raises(InsufficientData):
        seasonal_decompose(monthly(np.arange(20.0)))


def daily(name, values, start=D(2020, 1, 1)):
    return TimeSeries.daily(name, start, values)


def test_correlation_identical_and_negated(rng):
    x = rng.standard_normal(30)
    np.testing.assert_allclose(correlation_matrix([daily("a", x), daily("b", x)]), np.ones((2, 2)), atol=1e-12)
    r = correlation_matrix([daily("a", x), daily("b", -x)])
    assert r[0, 1] == pytest.approx(-1.0, abs=1e-12)


def test_correlation_independent_noise():
    rng = np.random.default_rng(7)
    r = correlation_matrix([daily("a", rng.standard_normal(1000)), daily("b", rng.standard_normal(1000))])
    assert abs(r[0, 1]) < 0.1


def test_correlation_aligns_on_common_dates(rng):
    x = rng.standard_normal(20)
    a = daily("a", x)
    b = daily("b", x[5:], start=D(2020, 1, 6))
    assert correlation_matrix([a, b])[0, 1] == pytest.approx(1.0)


def test_correlation_zero_variance_names_series():
    with pytest.raises(DegenerateVariance, match="'flat'"):
        correlation_matrix([daily("a", [1.0, 2.0, 4.0]), daily("flat", [3.0, 3.0, 3.0])])


@given(arrays(float, (25, 4), elements=st.floats(-10, 10)))
@settings(max_examples=50, deadline=None)
def test_correlation_matrix_psd(data):
    if np.any(data.std(axis=0) < 1e-2):
        return
    r = correlation_matrix([daily(f"s{i}", data[:, i]) for i in range(4)])
    np.testing.assert_allclose(r, r.T)
    np.testing.assert_allclose(np.diag(r), 1.0)
    assert np.linalg.eigvalsh(r).min() >= -1e-9


def test_vif_orthogonal_columns_are_one(rng):
    q, _ = np.linalg.qr(rng.standard_normal((50, 3)) - 0)
    cols = q - q.mean(axis=0)
    cols, _ = np.linalg.qr(cols)
    cols -= cols.mean(axis=0)  # QR of centred data keeps columns centred
    design = np.column_stack([np.ones(50), cols])
    v = vif(design, ["const", "a", "b", "c"])
    for val in v.values():
        assert val == pytest.approx(1.0, abs=1e-9)


def _aux_r2_normal_equations(X, j):
    y = X[:, j]
    Z = np.delete(X, j, axis=1)
    b = np.linalg.solve(Z.T @ Z, Z.T @ y)
    r = y - Z @ b
    has_const = any(np.all(c == c[0]) for c in Z.T)
    tss = np.sum((y - y.mean()) ** 2) if has_const else y @ y
    return 1 - r @ r / tss


def test_vif_known_auxiliary_r2():
    rng = np.random.default_rng(3)
    n = 20000
    x1 = rng.standard_normal(n)
    x2 = x1 + rng.standard_normal(n)  # population R^2 of x2 on x1 is 0.5
    X = np.column_stack([np.ones(n), x1, x2])
    v = vif(X, ["const", "x1", "x2"])
    assert v["x2"] == pytest.approx(2.0, abs=0.1)
    for j, name in enumerate(["const", "x1", "x2"]):
        assert v[name] == pytest.approx(1 / (1 - _aux_r2_normal_equations(X, j)), rel=1e-8)


def test_vif_duplicate_column():
    x = np.random.default_rng(1).standard_normal(30)
    with pytest.raises(ExactCollinearity):
        vif(np.column_stack([np.ones(30), x, x]))


def test_vif_mapping_input_and_lower_bound(rng):
    X = {"const": np.ones(40), "a": rng.standard_normal(40), "b": rng.standard_normal(40)}
    v = vif(X)
    assert list(v) == ["const", "a", "b"]
    assert all(val >= 1 - 1e-9 for val in v.values())
