"""Augmented Dickey-Fuller testing and automatic differencing.

The test regression (constant, no trend) is

    dy_t = c + gamma * y_{t-1} + sum_{i=1..k} delta_i * dy_{t-i} + eps_t

and the statistic is gamma_hat over its OLS standard error.  Lag order k
is chosen by AIC over 0..max_lags on a common sample (every candidate fit
sees the same rows), then the winning k is refit on all rows available to
it.  The null is a unit root; the series counts as stationary when the
statistic falls below the 5% critical value.

Critical values come from the MacKinnon response surface for the
constant-only case, whose asymptotic 5% point is about -2.86, with
finite-sample correction terms in 1/n, 1/n^2, 1/n^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSeries, InsufficientData, InvalidParameter
from .series import StationarySignal, difference

# Response-surface coefficients for the 5% point of the constant-only
# Dickey-Fuller t distribution: b0 + b1/n + b2/n^2 + b3/n^3.
_MACKINNON_5PCT_C = (-2.86154, -2.8903, -4.234, -40.04)

# Smallest sample the regression machinery accepts on top of the lag order.
_MIN_EXTRA_OBS = 15


@dataclass(frozen=True)
class AdfResult:
    """Outcome of one unit-root test.

    is_stationary holds exactly when statistic < critical_value_5pct.
    """

    statistic: float
    critical_value_5pct: float
    lags_used: int
    is_stationary: bool
    n_obs: int


def critical_value_5pct(n_obs: int) -> float:
    """Finite-sample 5% critical value for the constant-only test."""
    if n_obs < 1:
        raise InvalidParameter(f"n_obs must be >= 1, got {n_obs}")
    b0, b1, b2, b3 = _MACKINNON_5PCT_C
    n = float(n_obs)
    return b0 + b1 / n + b2 / n**2 + b3 / n**3


def schwert_max_lags(n_obs: int) -> int:
    """Rule-of-thumb lag ceiling, floor(12 * (n/100)^(1/4))."""
    if n_obs < 1:
        raise InvalidParameter(f"n_obs must be >= 1, got {n_obs}")
    return int(math.floor(12.0 * (n_obs / 100.0) ** 0.25))


def _ols_t_and_aic(X: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Fit OLS and return (t-stat of column 1, AIC, ssr).

    Column 1 is the lagged level; column 0 is the constant.  AIC uses the
    Gaussian log-likelihood, n*(log(2*pi) + log(ssr/n) + 1) + 2*k.
    """
    n, k = X.shape
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        raise DegenerateSeries("unit-root regression design is rank deficient")
    resid = y - X @ coef
    ssr = float(resid @ resid)
    if ssr <= 0.0 or n <= k:
        raise DegenerateSeries("unit-root regression fits exactly; "
                               "series is deterministic")
    sigma2 = ssr / (n - k)
    xtx_inv = np.linalg.inv(X.T @ X)
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    if se == 0.0:
        raise DegenerateSeries("zero standard error in unit-root regression")
    aic = n * (math.log(2.0 * math.pi) + math.log(ssr / n) + 1.0) + 2.0 * k
    return float(coef[1]) / se, aic, ssr


def _design(y: np.ndarray, dy: np.ndarray, k: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows t = start..len(dy)-1 of the ADF regression with k diff lags.

    dy[t] regressed on [1, y[t], dy[t-1], ..., dy[t-k]]; requires start >= k.
    """
    n_dy = len(dy)
    cols = [np.ones(n_dy - start), y[start:n_dy]]
    for i in range(1, k + 1):
        cols.append(dy[start - i:n_dy - i])
    return np.column_stack(cols), dy[start:]


def adf_test(signal: StationarySignal, max_lags: int | None = None) -> AdfResult:
    """Run the unit-root test on one signal.

    max_lags defaults to the Schwert rule, capped so the selection sample
    stays workable.  Candidate lag orders 0..max_lags are compared by AIC
    on a common sample; ties go to the smaller lag.
    """
    y = signal.values
    T = len(y)
    if float(np.std(y)) == 0.0:
        raise DegenerateSeries(f"{signal.market_id}: constant signal")
    if max_lags is None:
        if T < _MIN_EXTRA_OBS + 1:
            raise InsufficientData(
                f"{signal.market_id}: {T} observations is too short for a "
                f"unit-root test (need >= {_MIN_EXTRA_OBS + 1})")
        max_lags = max(0, min(schwert_max_lags(T), T - _MIN_EXTRA_OBS - 1))
    else:
        if max_lags < 0:
            raise InvalidParameter(f"max_lags must be >= 0, got {max_lags}")
        if T < _MIN_EXTRA_OBS + max_lags:
            raise InsufficientData(
                f"{signal.market_id}: {T} observations cannot support "
                f"max_lags={max_lags} (need >= {_MIN_EXTRA_OBS + max_lags})")

    dy = np.diff(y)

    # Lag selection on the sample common to every candidate.
    best = None
    for k in range(0, max_lags + 1):
        X, target = _design(y, dy, k, start=max_lags)
        _, aic, _ = _ols_t_and_aic(X, target)
        if best is None or (aic, k) < best:
            best = (aic, k)
    k = best[1]

    # Refit the winner on every row available at that lag order.
    X, target = _design(y, dy, k, start=k)
    stat, _, _ = _ols_t_and_aic(X, target)
    n_eff = len(target)
    crit = critical_value_5pct(n_eff)
    return AdfResult(statistic=stat,
                     critical_value_5pct=crit,
                     lags_used=k,
                     is_stationary=stat < crit,
                     n_obs=n_eff)


def make_stationary(signal: StationarySignal, max_diffs: int = 2,
                    max_lags: int | None = None) -> StationarySignal:
    """Difference a signal until the unit-root test passes.

    At most max_diffs first-difference passes are applied (the returned
    diff_order never exceeds max_diffs).  If the capped signal still fails
    the test it is returned with still_nonstationary set rather than
    raising; each differencing decision uses only the data in `signal`,
    so windowed callers get no lookahead.
    """
    if max_diffs < 0:
        raise InvalidParameter(f"max_diffs must be >= 0, got {max_diffs}")
    current = signal
    while True:
        result = adf_test(current, max_lags=max_lags)
        if result.is_stationary:
            if current.still_nonstationary:
                current = replace(current, still_nonstationary=False)
            return current
        if current.diff_order >= max_diffs:
            return replace(current, still_nonstationary=True)
        current = difference(current, 1)
