"""Price-series container types and the stationarizing transforms.

Prices are quoted in percentage points on [0, 100] (a YES contract worth
73 cents trades at 73.0).  Statistical work happens in log-odds space,
where a price p maps to ln(p / (100 - p)); the transform is symmetric
around 50 and stretches the tails, so a 1-point move near 95 counts for
more than a 1-point move near 50.

All pairwise operations align series by calendar date with an inner join;
there is no forward-filling and no interpolation, which keeps every
downstream statistic free of lookahead.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    DegenerateSeries,
    DivisionByZero,
    EmptyInput,
    InsufficientData,
    InvalidParameter,
    LengthMismatch,
)

ComovementSign = Literal[-1, 1]

DEFAULT_CLIP_EPSILON = 0.5  # percentage points kept away from the 0/100 poles
DEFAULT_MIN_OVERLAP = 30


def _readonly_array(values: Iterable[float]) -> np.ndarray:
    arr = np.array(list(values) if not isinstance(values, np.ndarray) else values,
                   dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidParameter("series values must be one-dimensional")
    arr.setflags(write=False)
    return arr


def _check_dates(dates: Sequence[date]) -> tuple[date, ...]:
    out = tuple(dates)
    for d in out:
        if not isinstance(d, date):
            raise InvalidParameter(f"dates must be datetime.date, got {type(d).__name__}")
    for a, b in zip(out, out[1:]):
        if not a < b:
            raise InvalidParameter(f"dates must be strictly increasing ({a} !< {b})")
    return out


@dataclass(frozen=True)
class PriceSeries:
    """Daily close prices for one market.

    Attributes:
        market_id: Stable identifier of the market.
        dates: Strictly increasing observation dates.
        prices: Prices in percentage points, each within [0, 100].
    """

    market_id: str
    dates: tuple[date, ...]
    prices: np.ndarray

    def __post_init__(self):
        if not self.market_id:
            raise InvalidParameter("market_id must be non-empty")
        object.__setattr__(self, "dates", _check_dates(self.dates))
        arr = _readonly_array(self.prices)
        object.__setattr__(self, "prices", arr)
        if len(self.dates) != len(arr):
            raise LengthMismatch(
                f"{self.market_id}: {len(self.dates)} dates vs {len(arr)} prices")
        if len(arr) == 0:
            raise EmptyInput(f"{self.market_id}: empty price series")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter(f"{self.market_id}: prices must be finite")
        if arr.min() < 0.0 or arr.max() > 100.0:
            raise InvalidParameter(
                f"{self.market_id}: prices must lie in [0, 100], "
                f"got range [{arr.min()}, {arr.max()}]")

    def __len__(self) -> int:
        return len(self.dates)

    def slice_dates(self, start: date, end: date) -> "PriceSeries":
        """Restrict to observations with start <= date <= end (inclusive)."""
        keep = [i for i, d in enumerate(self.dates) if start <= d <= end]
        if not keep:
            raise InsufficientData(
                f"{self.market_id}: no observations in [{start}, {end}]")
        return PriceSeries(self.market_id,
                           tuple(self.dates[i] for i in keep),
                           self.prices[keep])


@dataclass(frozen=True)
class StationarySignal:
    """A log-odds signal, possibly differenced, ready for regression work.

    diff_order counts how many first-difference passes separate `values`
    from the raw log-odds series; dates are the surviving trailing dates,
    so len(values) == len(original) - diff_order.  still_nonstationary is
    set when differencing hit its cap without passing the unit-root test.
    """

    market_id: str
    dates: tuple[date, ...]
    values: np.ndarray
    diff_order: int = 0
    clip_epsilon: float = DEFAULT_CLIP_EPSILON
    still_nonstationary: bool = False

    def __post_init__(self):
        if not self.market_id:
            raise InvalidParameter("market_id must be non-empty")
        object.__setattr__(self, "dates", _check_dates(self.dates))
        arr = _readonly_array(self.values)
        object.__setattr__(self, "values", arr)
        if len(self.dates) != len(arr):
            raise LengthMismatch(
                f"{self.market_id}: {len(self.dates)} dates vs {len(arr)} values")
        if len(arr) == 0:
            raise EmptyInput(f"{self.market_id}: empty signal")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter(f"{self.market_id}: signal values must be finite")
        if self.diff_order < 0:
            raise InvalidParameter("diff_order must be >= 0")

    def __len__(self) -> int:
        return len(self.dates)


def log_odds(series: PriceSeries, clip_epsilon: float = DEFAULT_CLIP_EPSILON) -> StationarySignal:
    """Map prices to log-odds, clamping away from the 0/100 poles first.

    Each price is clamped to [clip_epsilon, 100 - clip_epsilon] before the
    transform so boundary prices stay finite.  clip_epsilon is in
    percentage points and must satisfy 0 < clip_epsilon < 50.
    """
    if not 0.0 < clip_epsilon < 50.0:
        raise InvalidParameter(f"clip_epsilon must be in (0, 50), got {clip_epsilon}")
    if len(series) == 0:
        raise EmptyInput(f"{series.market_id}: empty price series")
    clipped = np.clip(series.prices, clip_epsilon, 100.0 - clip_epsilon)
    values = np.log(clipped / (100.0 - clipped))
    return StationarySignal(series.market_id, series.dates, values,
                            diff_order=0, clip_epsilon=clip_epsilon)


def inverse_log_odds(values: np.ndarray) -> np.ndarray:
    """Map log-odds back to prices in percentage points (logistic)."""
    return 100.0 / (1.0 + np.exp(-np.asarray(values, dtype=np.float64)))


def difference(signal: StationarySignal, passes: int = 1) -> StationarySignal:
    """Apply `passes` first differences; dates shrink from the front."""
    if passes < 0:
        raise InvalidParameter(f"passes must be >= 0, got {passes}")
    if passes == 0:
        return signal
    if len(signal) <= passes:
        raise InsufficientData(
            f"{signal.market_id}: {len(signal)} observations cannot be "
            f"differenced {passes} time(s)")
    values = np.diff(signal.values, n=passes)
    return replace(signal,
                   dates=signal.dates[passes:],
                   values=values,
                   diff_order=signal.diff_order + passes)


def relative_change(series: PriceSeries) -> list[tuple[date, float]]:
    """One-step relative price changes, (p_t - p_{t-1}) / p_{t-1}.

    The change at index t is dated at t.  Raises DivisionByZero if any
    base price p_{t-1} is exactly zero.
    """
    if len(series) < 2:
        raise InsufficientData(
            f"{series.market_id}: need >= 2 observations for relative changes")
    base = series.prices[:-1]
    if np.any(base == 0.0):
        raise DivisionByZero(f"{series.market_id}: zero base price in relative change")
    changes = (series.prices[1:] - base) / base
    return [(series.dates[i + 1], float(changes[i])) for i in range(len(changes))]


def integrate(signal: StationarySignal, passes: int = 1) -> StationarySignal:
    """Undo `passes` first differences by cumulative summation.

    The constants of integration were lost when the signal was
    differenced, so each pass recovers the shallower signal only up to an
    arbitrary additive offset.  Shift-invariant consumers (correlations,
    regressions with an intercept) are unaffected; anything reading
    absolute levels must not use this.  Dates are unchanged: partial sums
    stay on the dates of their increments.
    """
    if passes < 0:
        raise InvalidParameter(f"passes must be >= 0, got {passes}")
    if passes > signal.diff_order:
        raise InvalidParameter(
            f"{signal.market_id}: cannot integrate {passes} time(s) past "
            f"diff_order {signal.diff_order}")
    if passes == 0:
        return signal
    values = signal.values
    for _ in range(passes):
        values = np.cumsum(values)
    return replace(signal, values=values, diff_order=signal.diff_order - passes)


def as_changes(x: StationarySignal, y: StationarySignal,
               ) -> tuple[StationarySignal, StationarySignal]:
    """Bring two aligned signals to differencing depth exactly one.

    Depth one is the day-over-day log-odds move, the only depth at which
    a contemporaneous correlation between the two markets is meaningful:
    correlating a level with an innovation sequence is noise, and an
    over-differenced signal carries an echo of the previous day's move
    that can cancel or flip the correlation of a genuinely co-moving
    pair.  Deeper signals are integrated back down (Pearson correlation
    ignores the lost constants); level signals are differenced once,
    which trims their leading date, so both are then tail-trimmed to the
    common length.
    """
    x = integrate(x, x.diff_order - 1) if x.diff_order > 1 else difference(
        x, 1 - x.diff_order)
    y = integrate(y, y.diff_order - 1) if y.diff_order > 1 else difference(
        y, 1 - y.diff_order)
    n = min(len(x), len(y))
    if len(x) > n:
        x = replace(x, dates=x.dates[-n:], values=x.values[-n:])
    if len(y) > n:
        y = replace(y, dates=y.dates[-n:], values=y.values[-n:])
    return x, y


def comovement_sign(x: StationarySignal, y: StationarySignal) -> int:
    """Sign of the contemporaneous Pearson correlation of two signals.

    Inputs must already be aligned (equal length, same dates when both
    carry them) and at the same differencing depth; use as_changes when
    they may differ.  An exactly zero correlation counts as +1.
    """
    if len(x) != len(y):
        raise LengthMismatch(
            f"({x.market_id}, {y.market_id}): lengths {len(x)} vs {len(y)}")
    if x.dates != y.dates:
        raise LengthMismatch(
            f"({x.market_id}, {y.market_id}): date grids differ; align first")
    if len(x) < 3:
        raise InsufficientData("need >= 3 aligned observations for a correlation sign")
    xv, yv = x.values, y.values
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0:
        raise DegenerateSeries(f"{x.market_id}: constant signal has no correlation sign")
    if sy == 0.0:
        raise DegenerateSeries(f"{y.market_id}: constant signal has no correlation sign")
    r = float((xc * yc).sum()) / (sx * sy)
    return -1 if r < 0.0 else 1


def align_signals(x: StationarySignal, y: StationarySignal,
                  min_overlap: int = DEFAULT_MIN_OVERLAP,
                  ) -> tuple[StationarySignal, StationarySignal]:
    """Inner-join two signals on calendar date.

    Returns the restrictions of x and y to their common dates, in date
    order.  Raises InsufficientData when fewer than min_overlap dates are
    shared.
    """
    if min_overlap < 1:
        raise InvalidParameter(f"min_overlap must be >= 1, got {min_overlap}")
    if x.dates == y.dates:
        common = x.dates
        xa, ya = x, y
    else:
        shared = set(x.dates) & set(y.dates)
        common = tuple(sorted(shared))
        xi = [i for i, d in enumerate(x.dates) if d in shared]
        yi = [i for i, d in enumerate(y.dates) if d in shared]
        xa = replace(x, dates=common, values=x.values[xi]) if common else None
        ya = replace(y, dates=common, values=y.values[yi]) if common else None
    if len(common) < min_overlap:
        raise InsufficientData(
            f"({x.market_id}, {y.market_id}): only {len(common)} overlapping "
            f"dates, need >= {min_overlap}")
    return xa, ya


def align_prices(x: PriceSeries, y: PriceSeries,
                 min_overlap: int = 2) -> tuple[PriceSeries, PriceSeries]:
    """Inner-join two price series on calendar date."""
    if min_overlap < 1:
        raise InvalidParameter(f"min_overlap must be >= 1, got {min_overlap}")
    if x.dates == y.dates:
        if len(x) < min_overlap:
            raise InsufficientData(
                f"({x.market_id}, {y.market_id}): only {len(x)} overlapping dates")
        return x, y
    shared = set(x.dates) & set(y.dates)
    common = tuple(sorted(shared))
    if len(common) < min_overlap:
        raise InsufficientData(
            f"({x.market_id}, {y.market_id}): only {len(common)} overlapping "
            f"dates, need >= {min_overlap}")
    xi = [i for i, d in enumerate(x.dates) if d in shared]
    yi = [i for i, d in enumerate(y.dates) if d in shared]
    return (PriceSeries(x.market_id, common, x.prices[xi]),
            PriceSeries(y.market_id, common, y.prices[yi]))
