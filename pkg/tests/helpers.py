"""Small constructors shared across the test modules."""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from leadlag.semantic import EventMetadata
from leadlag.series import PriceSeries, StationarySignal

START = date(2024, 1, 1)


def daily_dates(n: int, start: date = START) -> tuple[date, ...]:
    return tuple(start + timedelta(days=i) for i in range(n))


def make_signal(values, market_id: str = "X", start: date = START,
                **kwargs) -> StationarySignal:
    values = np.asarray(values, dtype=float)
    return StationarySignal(market_id, daily_dates(len(values), start),
                            values, **kwargs)


def make_prices(values, market_id: str = "X", start: date = START,
                dates=None) -> PriceSeries:
    values = np.asarray(values, dtype=float)
    if dates is None:
        dates = daily_dates(len(values), start)
    return PriceSeries(market_id, tuple(dates), values)


def make_metadata(market_id: str, event_group: str | None = None,
                  title: str | None = None) -> EventMetadata:
    return EventMetadata(
        market_id=market_id,
        title=title or f"Will event {market_id} happen?",
        description=f"Resolves YES if event {market_id} occurs by year end.",
        event_group=event_group or market_id,
    )
