"""Signal-triggered trading protocol over discovered lead-lag pairs.

The protocol is deliberately mechanical.  For a directed pair with
co-movement sign s, a trigger fires at aligned observation t when the
leader's relative price change r_t = (p_t - p_{t-1}) / p_{t-1} satisfies
|r_t| > theta (strict).  The follower is entered at the next aligned
observation t+1 with direction d = sign(r_t) * s, held for h aligned
observations, and exited at t+h+1, no stop and no discretion:

    pnl = d * position_size * (p_exit - p_entry)

with prices in percentage points, so position_size 100 and a 7-point
favourable move pays 700 currency units.  Signals whose exit would land
past the end of the aligned data are recorded as skips, never silently
dropped.  Trades are independent; overlapping positions are allowed.

Timing is by position in the inner-joined leader/follower date grid, so
a signal on a date the follower never traded cannot execute.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InsufficientData, InvalidParameter, UnknownMarket
from .series import PriceSeries, align_prices

SIGN_SOURCES = ("statistical", "semantic")


@dataclass(frozen=True)
class TradeConfig:
    """Protocol parameters.

    theta is the trigger threshold on |r| (0 means every nonzero move
    fires); hold_days counts aligned observations between entry and exit;
    sign_source selects whether the trade direction uses the
    statistically estimated co-movement sign or the scorer's expected
    sign.
    """

    theta: float = 0.0
    hold_days: int = 7
    position_size: float = 100.0
    sign_source: str = "statistical"

    def __post_init__(self):
        if self.theta < 0.0:
            raise InvalidParameter(f"theta must be >= 0, got {self.theta}")
        if self.hold_days < 1:
            raise InvalidParameter(f"hold_days must be >= 1, got {self.hold_days}")
        if self.position_size <= 0.0:
            raise InvalidParameter(
                f"position_size must be > 0, got {self.position_size}")
        if self.sign_source not in SIGN_SOURCES:
            raise InvalidParameter(f"unknown sign_source {self.sign_source!r}")


class TriggerSignal(NamedTuple):
    """A leader move that breaches the threshold."""

    index: int          # position in the aligned series, >= 1
    signal_date: date
    change: float       # relative change r_t
    direction: int      # sign(r_t)


@dataclass(frozen=True)
class TradeRecord:
    """One executed round trip on the follower."""

    leader_id: str
    follower_id: str
    signal_date: date
    entry_date: date
    exit_date: date
    direction: int
    entry_price: float
    exit_price: float
    leader_move_pt: float    # |p_t - p_{t-1}| of the leader, percentage points
    leader_move_rel: float   # |r_t| of the leader
    pnl: float
    same_event: bool | None = None


@dataclass(frozen=True)
class SkippedTrade:
    """A trigger that could not be executed, and why."""

    leader_id: str
    follower_id: str
    signal_date: date
    reason: str


@dataclass(frozen=True)
class TradeLog:
    """All trades and skips from one backtest run."""

    trades: tuple[TradeRecord, ...]
    skips: tuple[SkippedTrade, ...]

    def __post_init__(self):
        object.__setattr__(self, "trades", tuple(self.trades))
        object.__setattr__(self, "skips", tuple(self.skips))


def generate_signals(leader: PriceSeries, theta: float) -> list[TriggerSignal]:
    """All threshold breaches in a leader series, in date order."""
    if theta < 0.0:
        raise InvalidParameter(f"theta must be >= 0, got {theta}")
    if len(leader) < 2:
        return []
    prices = leader.prices
    signals: list[TriggerSignal] = []
    for t in range(1, len(prices)):
        prev = prices[t - 1]
        if prev == 0.0:
            continue  # no defined relative change off a zero price
        r = (prices[t] - prev) / prev
        if abs(r) > theta:
            signals.append(TriggerSignal(index=t, signal_date=leader.dates[t],
                                         change=float(r),
                                         direction=1 if r > 0 else -1))
    return signals


def trade_direction(r_sign: int, comovement: int) -> int:
    """Direction of the follower position, d = sign(r) * s."""
    if r_sign not in (-1, 1):
        raise InvalidParameter(f"r_sign must be -1 or +1, got {r_sign}")
    if comovement not in (-1, 1):
        raise InvalidParameter(f"comovement must be -1 or +1, got {comovement}")
    return r_sign * comovement


def execute_trade(leader_id: str, follower_id: str, follower: PriceSeries,
                  signal: TriggerSignal, direction: int, config: TradeConfig,
                  leader_move_pt: float,
                  same_event: bool | None = None) -> TradeRecord | SkippedTrade:
    """Execute one trigger mechanically against the aligned follower series.

    Entry is at signal.index + 1, exit at signal.index + hold_days + 1;
    either landing past the end of the data yields a SkippedTrade.
    """
    if direction not in (-1, 1):
        raise InvalidParameter(f"direction must be -1 or +1, got {direction}")
    entry_idx = signal.index + 1
    exit_idx = signal.index + config.hold_days + 1
    if entry_idx >= len(follower):
        return SkippedTrade(leader_id, follower_id, signal.signal_date,
                            "entry beyond available data")
    if exit_idx >= len(follower):
        return SkippedTrade(leader_id, follower_id, signal.signal_date,
                            "exit beyond available data")
    entry_price = float(follower.prices[entry_idx])
    exit_price = float(follower.prices[exit_idx])
    pnl = direction * config.position_size * (exit_price - entry_price)
    return TradeRecord(
        leader_id=leader_id, follower_id=follower_id,
        signal_date=signal.signal_date,
        entry_date=follower.dates[entry_idx],
        exit_date=follower.dates[exit_idx],
        direction=direction,
        entry_price=entry_price, exit_price=exit_price,
        leader_move_pt=leader_move_pt,
        leader_move_rel=abs(signal.change),
        pnl=float(pnl), same_event=same_event)


def _entry_fields(entry) -> tuple[str, str, int]:
    if hasattr(entry, "leader_id"):
        return entry.leader_id, entry.follower_id, entry.sign
    leader_id, follower_id, sign = entry
    return leader_id, follower_id, sign


def run_backtest(portfolio: Sequence, prices: Mapping[str, PriceSeries],
                 window: tuple[date, date], config: TradeConfig,
                 event_groups: Mapping[str, str] | None = None) -> TradeLog:
    """Run the protocol for every (leader, follower, sign) in a window.

    Portfolio entries are (leader_id, follower_id, sign) triples or any
    objects with those attributes.  Each pair's price series are first
    restricted to the window, then inner-joined on date.  Pairs with too
    little aligned data simply produce no trades.  same_event is filled
    from event_groups when both markets appear in it.
    """
    start, end = window
    if start > end:
        raise InvalidParameter(f"window start {start} is after end {end}")
    trades: list[TradeRecord] = []
    skips: list[SkippedTrade] = []
    for entry in portfolio:
        leader_id, follower_id, sign = _entry_fields(entry)
        if sign not in (-1, 1):
            raise InvalidParameter(
                f"({leader_id}, {follower_id}): sign must be -1 or +1, got {sign}")
        for mid in (leader_id, follower_id):
            if mid not in prices:
                raise UnknownMarket(f"no price series for market {mid!r}")
        try:
            lw = prices[leader_id].slice_dates(start, end)
            fw = prices[follower_id].slice_dates(start, end)
            leader, follower = align_prices(lw, fw, min_overlap=2)
        except InsufficientData:
            continue  # nothing tradable in this window
        same_event = None
        if event_groups is not None and leader_id in event_groups \
                and follower_id in event_groups:
            same_event = event_groups[leader_id] == event_groups[follower_id]
        moves_pt = np.abs(np.diff(leader.prices))
        for sig in generate_signals(leader, config.theta):
            d = trade_direction(sig.direction, sign)
            outcome = execute_trade(leader_id, follower_id, follower, sig, d,
                                    config,
                                    leader_move_pt=float(moves_pt[sig.index - 1]),
                                    same_event=same_event)
            if isinstance(outcome, TradeRecord):
                trades.append(outcome)
            else:
                skips.append(outcome)
    trades.sort(key=lambda t: (t.signal_date, t.leader_id, t.follower_id))
    skips.sort(key=lambda s: (s.signal_date, s.leader_id, s.follower_id))
    return TradeLog(tuple(trades), tuple(skips))


TRADE_CSV_COLUMNS = (
    "status", "leader_id", "follower_id", "signal_date", "entry_date",
    "exit_date", "direction", "entry_price", "exit_price", "leader_move_pt",
    "leader_move_rel", "pnl", "same_event", "reason",
)


def _bool_cell(value: bool | None) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def write_trade_log_csv(log: TradeLog, path) -> None:
    """Write one row per trade and per skip, stable column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRADE_CSV_COLUMNS)
        for t in log.trades:
            writer.writerow([
                "filled", t.leader_id, t.follower_id,
                t.signal_date.isoformat(), t.entry_date.isoformat(),
                t.exit_date.isoformat(), t.direction,
                repr(t.entry_price), repr(t.exit_price),
                repr(t.leader_move_pt), repr(t.leader_move_rel), repr(t.pnl),
                _bool_cell(t.same_event), "",
            ])
        for s in log.skips:
            writer.writerow([
                "skipped", s.leader_id, s.follower_id,
                s.signal_date.isoformat(), "", "", "", "", "", "", "", "",
                "", s.reason,
            ])
