"""Bivariate Granger-causality testing and pairwise screening.

For a candidate leader x and follower y (both stationarized), the
unrestricted regression is

    y_t = a_0 + sum_{k=1..p} a_k y_{t-k} + sum_{k=1..p} b_k x_{t-k} + eps_t

and the restricted one drops the x lags.  Both are fit on the identical
effective sample of T_eff = T - p rows, and

    F = ((SSR_r - SSR_u) / p) / (SSR_u / (T_eff - 2p - 1))

is referred to the F(p, T_eff - 2p - 1) upper tail.  A small p-value
says the leader's history improves next-step prediction of the follower
beyond the follower's own history; it is a statement about forecasting
power, not mechanism.

Screening evaluates every unordered pair in both directions over a lag
sweep, keeps the single best directed result per pair, and ranks by
ascending p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import special

from .errors import (
    DegenerateSeries,
    InsufficientData,
    InsufficientUniverse,
    InvalidParameter,
    LengthMismatch,
    NoValidDirection,
    SingularDesign,
)
from .series import (
    DEFAULT_MIN_OVERLAP,
    StationarySignal,
    align_signals,
    as_changes,
    comovement_sign,
)

# Effective sample must cover both parameter sets with room to spare:
# T - lag >= 2*lag + 11.
_MIN_EFFECTIVE_SLACK = 11


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit summary: coefficients and residual sum of squares."""

    coefficients: np.ndarray
    ssr: float
    n_obs: int
    n_params: int

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)


@dataclass(frozen=True)
class GrangerResult:
    """One directed test: leader_id's past vs follower_id's present."""

    leader_id: str
    follower_id: str
    lag: int
    f_statistic: float
    p_value: float
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise InvalidParameter(f"sign must be -1 or +1, got {self.sign}")
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidParameter(f"p_value must be in [0, 1], got {self.p_value}")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.leader_id, self.follower_id)


@dataclass(frozen=True)
class RankedCandidates:
    """Screening output: directed pairs ranked by ascending p-value."""

    results: tuple[GrangerResult, ...]
    window_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "results", tuple(self.results))

    def __len__(self) -> int:
        return len(self.results)

    def __iter__(self) -> Iterator[GrangerResult]:
        return iter(self.results)

    def __getitem__(self, i):
        return self.results[i]

    def top(self, m: int) -> "RankedCandidates":
        if m < 1:
            raise InvalidParameter(f"m must be >= 1, got {m}")
        return RankedCandidates(self.results[:m], self.window_id)


def ols_fit(design: np.ndarray, target: np.ndarray) -> OlsFit:
    """Least squares of target on design (no implicit intercept).

    Requires more rows than columns and a full-rank design; raises
    SingularDesign otherwise.
    """
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidParameter(f"design must be 2-D, got ndim={X.ndim}")
    if y.ndim != 1:
        raise InvalidParameter(f"target must be 1-D, got ndim={y.ndim}")
    n, p = X.shape
    if n != len(y):
        raise LengthMismatch(f"design has {n} rows but target has {len(y)}")
    if n < p + 1:
        raise InsufficientData(f"need > {p} rows for {p} parameters, got {n}")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise SingularDesign(f"design has rank {rank} < {p} columns")
    resid = y - X @ coef
    return OlsFit(coefficients=coef, ssr=float(resid @ resid),
                  n_obs=n, n_params=p)


def f_tail(f: float, d1: int, d2: int) -> float:
    """Upper-tail probability of the F(d1, d2) distribution at f.

    Computed through the regularized incomplete beta function:
    P(F > f) = I_x(d2/2, d1/2) with x = d2 / (d2 + d1*f).
    """
    if d1 < 1 or d2 < 1:
        raise InvalidParameter(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if math.isnan(f) or f < 0.0:
        raise InvalidParameter(f"f statistic must be >= 0, got {f}")
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return float(special.betainc(d2 / 2.0, d1 / 2.0, x))


def _lag_columns(v: np.ndarray, lag: int) -> list[np.ndarray]:
    T = len(v)
    return [v[lag - k:T - k] for k in range(1, lag + 1)]


def granger_test(x: StationarySignal, y: StationarySignal, lag: int) -> GrangerResult:
    """Test whether x leads y at the given lag order.

    x and y must already be aligned on a common date grid.  Also attaches
    the co-movement sign of the pair's contemporaneous day-over-day
    moves (both signals brought to differencing depth one), which later
    fixes the follower trade direction.
    """
    if lag < 1:
        raise InvalidParameter(f"lag must be >= 1, got {lag}")
    if len(x) != len(y):
        raise LengthMismatch(
            f"({x.market_id}, {y.market_id}): lengths {len(x)} vs {len(y)}; "
            f"align first")
    if x.dates != y.dates:
        raise LengthMismatch(
            f"({x.market_id}, {y.market_id}): date grids differ; align first")
    T = len(y)
    t_eff = T - lag
    needed = 2 * lag + _MIN_EFFECTIVE_SLACK
    if t_eff < needed:
        raise InsufficientData(
            f"({x.market_id}, {y.market_id}): effective sample {t_eff} < "
            f"{needed} at lag {lag}")
    xv, yv = x.values, y.values
    if float(np.std(xv)) == 0.0:
        raise DegenerateSeries(f"{x.market_id}: constant signal")
    if float(np.std(yv)) == 0.0:
        raise DegenerateSeries(f"{y.market_id}: constant signal")

    target = yv[lag:]
    ones = np.ones(t_eff)
    y_lags = _lag_columns(yv, lag)
    x_lags = _lag_columns(xv, lag)
    restricted = ols_fit(np.column_stack([ones] + y_lags), target)
    unrestricted = ols_fit(np.column_stack([ones] + y_lags + x_lags), target)

    df_denom = t_eff - 2 * lag - 1
    if unrestricted.ssr <= 0.0:
        # Perfect unrestricted fit: infinite F unless the restriction
        # also fits perfectly, in which case there is nothing to test.
        f_stat = 0.0 if restricted.ssr <= 1e-12 else math.inf
    else:
        f_stat = ((restricted.ssr - unrestricted.ssr) / lag) / (unrestricted.ssr / df_denom)
        f_stat = max(f_stat, 0.0)
    p_value = f_tail(f_stat, lag, df_denom)
    sign = comovement_sign(*as_changes(x, y))
    return GrangerResult(leader_id=x.market_id, follower_id=y.market_id,
                         lag=lag, f_statistic=f_stat, p_value=p_value, sign=sign)


def best_direction(a: StationarySignal, b: StationarySignal,
                   lags: Iterable[int],
                   min_overlap: int = DEFAULT_MIN_OVERLAP) -> GrangerResult:
    """Pick the single most significant directed result for one pair.

    Both orderings are tested at every lag in the sweep on the same
    inner-joined sample.  The minimum p-value wins; exact ties go to the
    lexicographically smaller leader id, then the smaller lag.  Raises
    NoValidDirection when every combination fails its preconditions.
    """
    lag_list = sorted(set(lags))
    if not lag_list:
        raise InvalidParameter("lag sweep must be non-empty")
    if lag_list[0] < 1:
        raise InvalidParameter(f"lags must be >= 1, got {lag_list[0]}")
    if a.market_id == b.market_id:
        raise InvalidParameter(f"cannot pair {a.market_id} with itself")
    ax, bx = align_signals(a, b, min_overlap=min_overlap)
    orderings = sorted([(ax, bx), (bx, ax)], key=lambda pair: pair[0].market_id)
    results: list[GrangerResult] = []
    failures: list[str] = []
    for lead, follow in orderings:
        for lag in lag_list:
            try:
                results.append(granger_test(lead, follow, lag))
            except (InsufficientData, DegenerateSeries, SingularDesign) as exc:
                failures.append(str(exc))
    if not results:
        raise NoValidDirection(
            f"({a.market_id}, {b.market_id}): no usable direction "
            f"({'; '.join(failures[:2])})")
    return min(results, key=lambda r: (r.p_value, r.leader_id, r.lag))


def screen_pairs(universe: Sequence[StationarySignal], lags: Iterable[int],
                 k: int, min_overlap: int = DEFAULT_MIN_OVERLAP,
                 window_id: int = 0) -> RankedCandidates:
    """Rank the best directed result of every overlapping pair.

    Pairs whose overlap or sample is too small are skipped.  Ranking is
    ascending p-value, then descending F, then lexicographic (leader,
    follower); at most one direction survives per unordered pair.  The
    ranking is invariant to the ordering of `universe`.
    """
    if k < 1:
        raise InvalidParameter(f"k must be >= 1, got {k}")
    signals = sorted(universe, key=lambda s: s.market_id)
    ids = [s.market_id for s in signals]
    if len(set(ids)) != len(ids):
        raise InvalidParameter("universe contains duplicate market ids")
    if len(signals) < 2:
        raise InsufficientUniverse(
            f"screening needs >= 2 markets, got {len(signals)}")
    results: list[GrangerResult] = []
    evaluated = 0
    for i in range(len(signals)):
        for j in range(i + 1, len(signals)):
            try:
                results.append(best_direction(signals[i], signals[j], lags,
                                              min_overlap=min_overlap))
                evaluated += 1
            except (InsufficientData, NoValidDirection, DegenerateSeries):
                continue
    if evaluated == 0:
        raise InsufficientUniverse("no pair had a valid overlapping window")
    results.sort(key=lambda r: (r.p_value, -r.f_statistic,
                                r.leader_id, r.follower_id))
    return RankedCandidates(tuple(results[:k]), window_id=window_id)
