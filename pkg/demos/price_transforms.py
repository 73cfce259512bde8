"""Price space vs log-odds space, and why the screen works in the latter.

A prediction-market price lives on [0, 100], so a 2-point move near 95
is a much bigger statement than the same move near 50.  The log-odds
transform stretches the tails until moves are comparable, at the cost
of blowing up at the poles; a small clamp keeps that finite.
"""

from datetime import date, timedelta

import numpy as np

from leadlag import (
    PriceSeries,
    as_changes,
    comovement_sign,
    difference,
    inverse_log_odds,
    log_odds,
)

dates = tuple(date(2024, 1, 1) + timedelta(days=i) for i in range(8))

# The same 2-point move, placed mid-range and next to the pole.
mid = PriceSeries("MID", dates, np.array([50, 52, 50, 52, 50, 52, 50, 52.0]))
edge = PriceSeries("EDGE", dates, np.array([95, 97, 95, 97, 95, 97, 95, 97.0]))

for series in (mid, edge):
    signal = log_odds(series)
    step = signal.values[1] - signal.values[0]
    print(f"{series.market_id}: 2pt price move = {step:.4f} in log-odds")

# Boundary prices would map to +/- infinity; the default clamp holds
# them 0.5pt inside the poles instead.
pinned = PriceSeries("PIN", dates[:3], np.array([0.0, 50.0, 100.0]))
print("\nclamped log-odds of [0, 50, 100]:", np.round(log_odds(pinned).values, 3))
print("round trip back to prices:      ",
      np.round(inverse_log_odds(log_odds(pinned).values), 3))

# Differencing peels off one unit root per pass and drops one leading
# date each time; the record of how deep we went rides on the signal.
rng = np.random.default_rng(7)
walk_prices = np.clip(50 + np.cumsum(rng.normal(0, 2, 60)), 1, 99)
walk = PriceSeries("WALK", tuple(date(2024, 1, 1) + timedelta(days=i)
                                 for i in range(60)), walk_prices)
level = log_odds(walk)
d1 = difference(level, 1)
print(f"\n{walk.market_id}: {len(level)} level obs -> {len(d1)} changes, "
      f"diff_order {level.diff_order} -> {d1.diff_order}")

# The co-movement sign is read off day-over-day moves.  as_changes
# brings both sides to that depth no matter how far each was
# differenced, so a mixed pair still gets a meaningful sign.
mirror = PriceSeries("MIRROR", walk.dates,
                     np.clip(100 - walk_prices + rng.normal(0, 0.3, 60), 1, 99))
a, b = as_changes(level, difference(log_odds(mirror), 1))
print(f"sign of WALK vs its mirror image: {comovement_sign(a, b)} (expect -1)")
