"""End-to-end rolling evaluation: statistical baseline vs semantic hybrid.

Each rolling window trains the causality screen on its first 60 days,
picks a portfolio, and trades it blind on the next 30.  The statistical
mode trades the top pairs by p-value; the hybrid mode first re-ranks
the candidates by judged plausibility.  Here the judge is a stub that
plays an oracle: it grades every planted link strong with the true
sign and everything else weak, which isolates the value of a perfectly
informative re-ranker without any network traffic.
"""

from leadlag import (
    RerankConfig,
    RunConfig,
    ScorerConfig,
    ScreeningConfig,
    TradeConfig,
    WindowConfig,
    compare_reports,
    planted_universe,
    run_pipeline,
)

# Weak couplings under loud idiosyncratic noise: enough spurious pairs
# survive screening that selection quality actually matters.
universe, metadata, links = planted_universe(
    seed=4, n_markets=20, n_links=8, days=150, beta=0.15, lags=(2,),
    extra_vol=0.6)
planted = {(ln.leader_id, ln.follower_id) for ln in links}

oracle = {(ln.leader_id, ln.follower_id): ("strong", ln.sign) for ln in links}
config = RunConfig(
    screening=ScreeningConfig(k=30, lag_set=(1, 2, 3)),
    rerank=RerankConfig(m=20, scorer=ScorerConfig(
        mode="stub", stub_table=oracle, stub_default="weak")),
    trading=TradeConfig(theta=0.0, hold_days=3),
    windows=WindowConfig(train_days=60, test_days=30, step_days=30),
)

stat = run_pipeline(universe, metadata, config, "statistical")
hybrid = run_pipeline(universe, metadata, config, "hybrid")

print(f"{len(universe)} markets, {len(links)} planted links, "
      f"{len(stat.windows)} rolling windows\n")

print("per-window portfolios (planted pairs / traded pairs):")
for sw, hw in zip(stat.windows, hybrid.windows):
    w = sw.spec
    s_hits = sum((e.leader_id, e.follower_id) in planted for e in sw.portfolio)
    h_hits = sum((e.leader_id, e.follower_id) in planted for e in hw.portfolio)
    print(f"  window {w.window_id}: train {w.train_start}..{w.train_end} "
          f"test {w.test_start}..{w.test_end}  "
          f"candidates {sw.n_candidates:2d}  "
          f"statistical {s_hits}/{len(sw.portfolio)}  "
          f"hybrid {h_hits}/{len(hw.portfolio)}")


def show(label, m):
    wr = "-" if m.win_rate is None else f"{m.win_rate:.3f}"
    loss = "-" if m.avg_loss is None else f"{m.avg_loss:8.1f}"
    print(f"  {label:12s} trades {m.n_trades:4d}  win rate {wr}  "
          f"avg loss {loss}  total pnl {m.total_pnl:9.1f}")


print("\npooled over all test windows:")
show("statistical", stat.overall)
show("hybrid", hybrid.overall)

comparison = compare_reports(stat, hybrid)
s = comparison["summary"]
print(f"\nhybrid vs statistical: total pnl {s['total_pnl_change']:+.1f}, "
      f"win rate {s['win_rate_change_pp']:+.2f}pp, "
      f"avg loss shrunk {100 * s['avg_loss_reduction']:.1f}%")

# The same signals re-run under alternative holding periods.  The
# hybrid's edge concentrates at short holds near the planted two-day
# lag; far past it both portfolios are trading decayed noise.
print("\nhold-period ablation (total pnl):")
print(f"  {'hold':>4s} {'statistical':>12s} {'hybrid':>12s}")
for row in comparison["hold_ablation"]:
    print(f"  {row['hold_days']:4d} {row['statistical']['total_pnl']:12.1f} "
          f"{row['hybrid']['total_pnl']:12.1f}")
