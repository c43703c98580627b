"""Ordinary least squares with classical (homoskedastic) inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientData, RankDeficient, ShapeMismatch


@dataclass(frozen=True)
class OlsResult:
    beta: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    conf_intervals: np.ndarray  # shape (k, 2)
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray
    fitted: np.ndarray
    rss: float
    df_resid: int

    @property
    def n_obs(self) -> int:
        return int(self.residuals.size)

    @property
    def n_params(self) -> int:
        return int(self.beta.size)


def has_intercept(X: np.ndarray) -> bool:
    """True if some column is a non-zero constant."""
    X = np.asarray(X)
    if X.shape[0] == 0:
        return False
    return bool(np.any(np.all(X == X[0], axis=0) & (X[0] != 0)))


def t_inference(beta, std_errors, df: int, level: float = 0.95):
    """t statistics, two-sided p-values and confidence bounds at ``df`` degrees of freedom."""
    beta = np.asarray(beta, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    p = 2.0 * stats.t.sf(np.abs(t), df)
    crit = stats.t.ppf(0.5 + level / 2.0, df)
    ci = np.column_stack([beta - crit * se, beta + crit * se])
    return t, p, ci


def solve_lstsq(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares coefficients and RSS, without any rank checks."""
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return beta, float(r @ r)


def ols(X, y, intercept: bool | None = None) -> OlsResult:
    """Fit ``y = X beta + e`` by least squares.

    Standard errors come from ``s^2 (X'X)^-1`` with ``s^2 = RSS / (n - k)``,
    p-values and 95% intervals from Student's t with ``n - k`` degrees of
    freedom. R^2 uses a mean-centred total sum of squares when ``X``
    contains a constant column (auto-detected unless ``intercept`` is given),
    and the uncentred one otherwise. ``k`` counts every column of ``X``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeMismatch(f"design has shape {X.shape} but target has {y.size} rows")
    n, k = X.shape
    if n <= k:
        raise InsufficientData(f"ols needs more rows than columns ({n} rows, {k} columns)")
    # QR keeps the conditioning of X rather than X'X
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = diag.max(initial=0.0) * max(n, k) * np.finfo(float).eps
    if diag.size == 0 or np.any(diag <= tol):
        raise RankDeficient(f"design matrix ({n} x {k}) is not of full column rank")
    beta = np.linalg.solve(r, q.T @ y)
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    df = n - k
    s2 = rss / df
    r_inv = np.linalg.inv(r)
    cov = s2 * (r_inv @ r_inv.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    t, p, ci = t_inference(beta, se, df)
    if intercept is None:
        intercept = has_intercept(X)
    tss = float(np.sum((y - y.mean()) ** 2)) if intercept else float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else float("nan"))
    adj = 1.0 - (1.0 - r2) * (n - 1) / df
    return OlsResult(
        beta=beta, std_errors=se, t_stats=t, p_values=p, conf_intervals=ci,
        r_squared=r2, adj_r_squared=adj, residuals=resid, fitted=fitted,
        rss=rss, df_resid=df,
    )
