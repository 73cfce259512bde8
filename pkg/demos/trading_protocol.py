"""Walk the signal-triggered trading protocol through a hand fixture.

The protocol is deliberately rigid: a leader day-over-day move beyond
the threshold triggers a follower trade, entered at the next close and
exited a fixed number of days later, sized the same every time.  No
stops, no overlap handling, no discretion.  Rigidity is the point: the
backtest measures the quality of the discovered pairs, not of a
trading strategy layered on top.
"""

import tempfile
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from leadlag import (
    PriceSeries,
    TradeConfig,
    generate_signals,
    run_backtest,
    trade_direction,
    write_trade_log_csv,
)

START = date(2024, 1, 1)


def series(market_id, values):
    dates = tuple(START + timedelta(days=i) for i in range(len(values)))
    return PriceSeries(market_id, dates, np.asarray(values, dtype=float))


leader = series("L", [50, 60, 58, 57.9, 57.9, 50, 50, 50, 60, 60])
follower = series("F", [30, 35, 40, 42, 47, 45, 44, 42, 41, 39])
config = TradeConfig(theta=0.05, hold_days=2, position_size=100.0)

print("leader prices:  ", " ".join(f"{p:5.1f}" for p in leader.prices))
print("follower prices:", " ".join(f"{p:5.1f}" for p in follower.prices))
print(f"\ntrigger: |day-over-day relative change| > theta = {config.theta}")

# Day 1 (+20%), day 5 (-13.6%) and day 8 (+20%) breach; day 2's -3.3%
# and the flat days do not.  The comparison is strict, so a move of
# exactly theta would not trigger either.
for s in generate_signals(leader, config.theta):
    print(f"  {s.signal_date}  r={s.change:+.4f}  direction {s.direction:+d}")

# s=+1 says the pair co-moves, so each trade goes with the leader:
# direction d = sign(r) * s.
print(f"\nwith s=+1: d = sign(r) * s -> {trade_direction(+1, +1):+d} on up moves")

window = (leader.dates[0], leader.dates[-1])
log = run_backtest([("L", "F", +1)], {"L": leader, "F": follower},
                   window, config)

print(f"\n{len(log.trades)} filled, {len(log.skips)} skipped "
      f"(hold {config.hold_days} days, size {config.position_size:.0f}):")
for t in log.trades:
    print(f"  signal {t.signal_date}  enter {t.entry_date} @ {t.entry_price:.1f}"
          f"  exit {t.exit_date} @ {t.exit_price:.1f}"
          f"  d={t.direction:+d}  pnl {t.pnl:+8.2f}")
for s in log.skips:
    print(f"  signal {s.signal_date}  skipped: {s.reason}")

# PnL is d * size * (exit - entry) with prices in percentage points:
# the day-1 long enters at 40 and exits at 47 for +700, the day-5
# short enters at 44 and exits at 41 for +300, and the day-8 signal
# has no close two days after entry, so it is recorded, not traded.
total = sum(t.pnl for t in log.trades)
print(f"total pnl: {total:+.2f}")

# Flipping the believed co-movement sign reverses every position, so
# the pnl column negates exactly; fills and skips are unchanged.
flipped = run_backtest([("L", "F", -1)], {"L": leader, "F": follower},
                       window, config)
assert [t.pnl for t in flipped.trades] == [-t.pnl for t in log.trades]
assert flipped.skips == log.skips
print("\nflipping s negates every trade's pnl, fills unchanged")

# The blotter serializes to CSV with one row per fill and per skip.
out = Path(tempfile.mkdtemp()) / "trades.csv"
write_trade_log_csv(log, out)
print(f"\n{out.name}:")
print(out.read_text(), end="")
