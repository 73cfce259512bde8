"""Rolling-window evaluation: screen, select, trade, and report.

Each window trains the discovery machinery on train_days of history and
trades the selected pairs over the following test_days, then the window
slides forward by step_days (test intervals are non-overlapping at the
default step).  Two selection modes share every other stage:

    statistical  top M candidates by Granger p-value, unmodified.
    hybrid       the same top K candidates re-ranked by semantic verdict
                 strength, then cut to M.

Reports carry per-window and overall trade metrics plus three breakdowns
that localize where semantic filtering changes outcomes: average loss on
same-event versus different-event pairs, win rate by leader move size,
and a sweep of the holding horizon.  A report is a pure function of the
inputs and the config; serialization is key-sorted JSON with no
timestamps, so identical runs are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .backtest import TradeConfig, TradeLog, TradeRecord, run_backtest
from .config import RunConfig, config_snapshot
from .errors import (
    DegenerateSeries,
    InsufficientData,
    InsufficientUniverse,
    InvalidParameter,
    NoValidDirection,
    NoWindows,
    UnknownMarket,
)
from .granger import RankedCandidates, screen_pairs
from .semantic import EventMetadata, ScorerConfig, score_candidates, rerank
from .series import PriceSeries, StationarySignal, log_odds
from .stationarity import make_stationary

MODES = ("statistical", "hybrid")

LEADER_MOVE_BUCKETS = ((0.0, 5.0, "0-5pt"), (5.0, 10.0, "5-10pt"),
                       (10.0, None, "10pt+"))


@dataclass(frozen=True)
class WindowSpec:
    """One train/test window; all bounds are inclusive calendar dates."""

    window_id: int
    train_start: date
    train_end: date
    test_start: date
    test_end: date

    def __post_init__(self):
        if not (self.train_start <= self.train_end < self.test_start
                <= self.test_end):
            raise InvalidParameter(
                f"window {self.window_id}: bounds must satisfy train_start <= "
                f"train_end < test_start <= test_end")


@dataclass(frozen=True)
class Metrics:
    """Aggregate trade outcomes.

    Zero-pnl trades count in n_trades but are excluded from the win-rate
    denominator; win_rate/avg_win/avg_loss are None when their slice is
    empty.  avg_loss is negative by construction when defined.
    """

    n_trades: int
    n_wins: int
    n_losses: int
    n_zero: int
    win_rate: float | None
    avg_win: float | None
    avg_loss: float | None
    total_pnl: float


def make_windows(data_start: date, data_end: date, train_days: int = 60,
                 test_days: int = 30, step_days: int = 30) -> list[WindowSpec]:
    """All fully-contained windows over [data_start, data_end].

    Window i trains on [start + i*step, +train_days) and tests on the
    following test_days; only windows whose test interval fits inside the
    data range are emitted.  Raises NoWindows when none fit.
    """
    for name, value in (("train_days", train_days), ("test_days", test_days),
                        ("step_days", step_days)):
        if value < 1:
            raise InvalidParameter(f"{name} must be >= 1, got {value}")
    if data_start > data_end:
        raise InvalidParameter(f"data_start {data_start} is after {data_end}")
    windows: list[WindowSpec] = []
    i = 0
    while True:
        train_start = data_start + timedelta(days=i * step_days)
        train_end = train_start + timedelta(days=train_days - 1)
        test_start = train_end + timedelta(days=1)
        test_end = test_start + timedelta(days=test_days - 1)
        if test_end > data_end:
            break
        windows.append(WindowSpec(i, train_start, train_end,
                                  test_start, test_end))
        i += 1
    if not windows:
        raise NoWindows(
            f"range [{data_start}, {data_end}] cannot fit train_days="
            f"{train_days} + test_days={test_days}")
    return windows


def filter_universe(universe: Iterable[PriceSeries] | Mapping[str, PriceSeries],
                    window: WindowSpec, min_obs: int = 30,
                    min_std: float = 0.5) -> list[PriceSeries]:
    """Keep markets active enough in the training window to screen.

    A market survives when it has at least min_obs observations inside
    the training range and the standard deviation of those prices exceeds
    min_std percentage points.  Returns full (unsliced) series, sorted by
    market id.
    """
    series = universe.values() if isinstance(universe, Mapping) else universe
    kept: list[PriceSeries] = []
    for s in sorted(series, key=lambda s: s.market_id):
        idx = [i for i, d in enumerate(s.dates)
               if window.train_start <= d <= window.train_end]
        if len(idx) < min_obs:
            continue
        if float(np.std(s.prices[idx])) <= min_std:
            continue
        kept.append(s)
    return kept


def aggregate_metrics(trades: Iterable[TradeRecord] | TradeLog) -> Metrics:
    """Fold a set of trades into summary metrics."""
    if isinstance(trades, TradeLog):
        trades = trades.trades
    pnls = [t.pnl for t in trades]
    wins = [p for p in pnls if p > 0.0]
    losses = [p for p in pnls if p < 0.0]
    n_zero = len(pnls) - len(wins) - len(losses)
    decided = len(wins) + len(losses)
    return Metrics(
        n_trades=len(pnls),
        n_wins=len(wins),
        n_losses=len(losses),
        n_zero=n_zero,
        win_rate=(len(wins) / decided) if decided else None,
        avg_win=(sum(wins) / len(wins)) if wins else None,
        avg_loss=(sum(losses) / len(losses)) if losses else None,
        total_pnl=float(sum(pnls)),
    )


@dataclass(frozen=True)
class PortfolioEntry:
    """One traded pair: screening statistics plus any semantic verdict."""

    leader_id: str
    follower_id: str
    lag: int
    f_statistic: float
    p_value: float
    sign: int
    strength: str | None = None
    expected_sign: int | None = None

    def trade_sign(self, sign_source: str) -> int:
        if sign_source == "statistical":
            return self.sign
        if sign_source == "semantic":
            if self.expected_sign is None:
                raise InvalidParameter(
                    f"({self.leader_id}, {self.follower_id}): semantic "
                    f"sign_source needs a scored verdict")
            return self.expected_sign
        raise InvalidParameter(f"unknown sign_source {sign_source!r}")


@dataclass(frozen=True)
class WindowResult:
    """Everything one window produced (or the error that stopped it)."""

    spec: WindowSpec
    n_markets: int
    n_candidates: int
    portfolio: tuple[PortfolioEntry, ...]
    log: TradeLog
    metrics: Metrics
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    """Full output of one evaluation run in one selection mode."""

    windows: tuple[WindowResult, ...]
    overall: Metrics
    breakdowns: dict
    config: dict                       # serialized snapshot
    scoring_failures: tuple[dict, ...]
    stationarity_flags: tuple[dict, ...]

    def all_trades(self) -> list[TradeRecord]:
        return [t for w in self.windows for t in w.log.trades]

    def combined_log(self) -> TradeLog:
        return TradeLog(
            tuple(t for w in self.windows for t in w.log.trades),
            tuple(s for w in self.windows for s in w.log.skips))


def _prepare_signals(kept: list[PriceSeries], window: WindowSpec,
                     clip_epsilon: float, max_diffs: int,
                     ) -> tuple[list[StationarySignal], list[dict]]:
    """Train-slice each market, map to log-odds, difference to stationarity."""
    signals: list[StationarySignal] = []
    flagged: list[dict] = []
    for series in kept:
        train = series.slice_dates(window.train_start, window.train_end)
        try:
            signal = make_stationary(log_odds(train, clip_epsilon),
                                     max_diffs=max_diffs)
        except (InsufficientData, DegenerateSeries) as exc:
            flagged.append({"window_id": window.window_id,
                            "market_id": series.market_id,
                            "issue": str(exc)})
            continue
        if signal.still_nonstationary:
            flagged.append({"window_id": window.window_id,
                            "market_id": series.market_id,
                            "issue": "still non-stationary at max_diffs"})
        signals.append(signal)
    return signals, flagged


def _select_portfolio(candidates: RankedCandidates, mode: str,
                      metadata: Mapping[str, EventMetadata],
                      scorer: ScorerConfig, m: int,
                      ) -> tuple[tuple[PortfolioEntry, ...], list[dict]]:
    if mode == "statistical":
        chosen = candidates.top(m)
        entries = tuple(PortfolioEntry(r.leader_id, r.follower_id, r.lag,
                                       r.f_statistic, r.p_value, r.sign)
                        for r in chosen)
        return entries, []
    verdicts, failures = score_candidates(scorer, candidates, metadata)
    chosen = rerank(candidates, verdicts, m)
    entries = []
    for r in chosen:
        v = verdicts[(r.leader_id, r.follower_id)]
        entries.append(PortfolioEntry(r.leader_id, r.follower_id, r.lag,
                                      r.f_statistic, r.p_value, r.sign,
                                      strength=v.strength,
                                      expected_sign=v.expected_sign))
    return tuple(entries), failures


def _breakdown_same_event(trades: list[TradeRecord]) -> dict:
    out = {}
    for label, flag in (("same_event", True), ("different_event", False)):
        slice_trades = [t for t in trades if t.same_event is flag]
        losses = [t.pnl for t in slice_trades if t.pnl < 0.0]
        out[label] = {
            "n_trades": len(slice_trades),
            "n_losses": len(losses),
            "avg_loss": (sum(losses) / len(losses)) if losses else None,
        }
    return out


def _breakdown_leader_move(trades: list[TradeRecord]) -> list[dict]:
    rows = []
    for lo, hi, label in LEADER_MOVE_BUCKETS:
        bucket = [t for t in trades
                  if t.leader_move_pt >= lo
                  and (hi is None or t.leader_move_pt < hi)]
        m = aggregate_metrics(bucket)
        rows.append({"bucket": label, "n_trades": m.n_trades,
                     "n_wins": m.n_wins, "n_losses": m.n_losses,
                     "win_rate": m.win_rate})
    return rows


def _breakdown_hold_ablation(windows: tuple[WindowResult, ...],
                             prices: Mapping[str, PriceSeries],
                             trading: TradeConfig,
                             event_groups: Mapping[str, str],
                             horizons: tuple[int, ...]) -> list[dict]:
    """Re-trade the already-selected portfolios at alternative horizons.

    Selection is untouched; only the holding period changes, so the sweep
    isolates the horizon's effect.
    """
    rows = []
    for h in horizons:
        cfg = replace(trading, hold_days=h)
        trades: list[TradeRecord] = []
        n_skips = 0
        for w in windows:
            if w.error is not None:
                continue
            portfolio = [(e.leader_id, e.follower_id,
                          e.trade_sign(trading.sign_source))
                         for e in w.portfolio]
            log = run_backtest(portfolio, prices,
                               (w.spec.test_start, w.spec.test_end), cfg,
                               event_groups=event_groups)
            trades.extend(log.trades)
            n_skips += len(log.skips)
        m = aggregate_metrics(trades)
        rows.append({"hold_days": h, "n_skips": n_skips,
                     "metrics": _metrics_dict(m)})
    return rows


def run_pipeline(universe: Mapping[str, PriceSeries],
                 metadata: Mapping[str, EventMetadata],
                 config: RunConfig, mode: str,
                 windows: list[WindowSpec] | None = None) -> EvaluationReport:
    """Run the full rolling evaluation in one selection mode.

    The window schedule is derived from the union of observation dates
    unless an explicit list is given.  Per-window failures (for example a
    window with too few screenable markets) are recorded on the window
    and do not abort the run.  Statistical mode never touches the scorer.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown mode {mode!r}")
    if not universe:
        raise InsufficientUniverse("empty market universe")
    for mid in universe:
        if mid not in metadata:
            raise UnknownMarket(f"no metadata for market {mid!r}")
    event_groups = {mid: meta.event_group for mid, meta in metadata.items()}

    if windows is None:
        all_dates = sorted({d for s in universe.values() for d in s.dates})
        windows = make_windows(all_dates[0], all_dates[-1],
                               config.windows.train_days,
                               config.windows.test_days,
                               config.windows.step_days)
    cutoff = config.windows.post_cutoff_date
    if cutoff is not None:
        windows = [w for w in windows if w.test_start > cutoff]
        if not windows:
            raise NoWindows(f"no test window starts after {cutoff}")

    scr = config.screening
    results: list[WindowResult] = []
    scoring_failures: list[dict] = []
    stationarity_flags: list[dict] = []
    for spec in windows:
        kept = filter_universe(universe, spec, scr.min_obs, scr.min_std)
        signals, flagged = _prepare_signals(kept, spec, scr.clip_epsilon,
                                            scr.max_diffs)
        stationarity_flags.extend(flagged)
        empty_log = TradeLog((), ())
        try:
            candidates = screen_pairs(signals, scr.lag_set, scr.k,
                                      min_overlap=scr.min_overlap,
                                      window_id=spec.window_id)
            portfolio, failures = _select_portfolio(
                candidates, mode, metadata, config.rerank.scorer,
                config.rerank.m)
        except (InsufficientUniverse, NoValidDirection, InsufficientData) as exc:
            results.append(WindowResult(spec, len(kept), 0, (), empty_log,
                                        aggregate_metrics([]), error=str(exc)))
            continue
        for f in failures:
            scoring_failures.append({"window_id": spec.window_id, **f})
        triples = [(e.leader_id, e.follower_id,
                    e.trade_sign(config.trading.sign_source))
                   for e in portfolio]
        log = run_backtest(triples, universe, (spec.test_start, spec.test_end),
                           config.trading, event_groups=event_groups)
        results.append(WindowResult(spec, len(kept), len(candidates),
                                    portfolio, log, aggregate_metrics(log)))

    window_tuple = tuple(results)
    all_trades = [t for w in window_tuple for t in w.log.trades]
    breakdowns = {
        "same_event": _breakdown_same_event(all_trades),
        "leader_move": _breakdown_leader_move(all_trades),
        "hold_ablation": _breakdown_hold_ablation(
            window_tuple, universe, config.trading, event_groups,
            config.ablation_horizons),
    }
    return EvaluationReport(
        windows=window_tuple,
        overall=aggregate_metrics(all_trades),
        breakdowns=breakdowns,
        config=config_snapshot(config),
        scoring_failures=tuple(scoring_failures),
        stationarity_flags=tuple(stationarity_flags),
    )


def _metrics_dict(m: Metrics) -> dict:
    return dataclasses.asdict(m)


def _portfolio_dict(e: PortfolioEntry) -> dict:
    # Only the screening fields: reports of different selection modes over
    # the same selected pairs must serialize identically, and the verdict
    # fields already live in the portfolio artifact.
    return {"leader_id": e.leader_id, "follower_id": e.follower_id,
            "lag": e.lag, "f_statistic": e.f_statistic,
            "p_value": e.p_value, "sign": e.sign}


def report_to_dict(report: EvaluationReport) -> dict:
    """JSON-safe dict form of a report.

    Deliberately carries no selection-mode label and no timestamps: the
    payload is a pure function of inputs and config, so two runs of the
    same inputs compare byte-for-byte once serialized.
    """
    windows = []
    for w in report.windows:
        windows.append({
            "window_id": w.spec.window_id,
            "train_start": w.spec.train_start.isoformat(),
            "train_end": w.spec.train_end.isoformat(),
            "test_start": w.spec.test_start.isoformat(),
            "test_end": w.spec.test_end.isoformat(),
            "n_markets": w.n_markets,
            "n_candidates": w.n_candidates,
            "portfolio": [_portfolio_dict(e) for e in w.portfolio],
            "metrics": _metrics_dict(w.metrics),
            "n_trades": len(w.log.trades),
            "n_skips": len(w.log.skips),
            "skips": [{"leader_id": s.leader_id, "follower_id": s.follower_id,
                       "signal_date": s.signal_date.isoformat(),
                       "reason": s.reason} for s in w.log.skips],
            "error": w.error,
        })
    return {
        "schema_version": 1,
        "config": report.config,
        "windows": windows,
        "overall": _metrics_dict(report.overall),
        "breakdowns": report.breakdowns,
        "scoring_failures": list(report.scoring_failures),
        "stationarity_flags": list(report.stationarity_flags),
    }


def write_report_json(report: EvaluationReport, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=2,
                               sort_keys=True) + "\n")


def loss_reduction(stat_avg_loss: float | None,
                   hybrid_avg_loss: float | None) -> float | None:
    """Fraction of average loss magnitude removed by the hybrid mode.

    1 - |hybrid| / |statistical|; None when either side is undefined.
    """
    if stat_avg_loss is None or hybrid_avg_loss is None or stat_avg_loss == 0.0:
        return None
    return 1.0 - abs(hybrid_avg_loss) / abs(stat_avg_loss)


def compare_reports(statistical: EvaluationReport,
                    hybrid: EvaluationReport) -> dict:
    """Cross-mode tables: overall deltas, loss slices, move buckets, horizons.

    Both reports must come from the same inputs and window schedule.
    """
    s_windows = [w.spec for w in statistical.windows]
    h_windows = [w.spec for w in hybrid.windows]
    if s_windows != h_windows:
        raise InvalidParameter("reports cover different window schedules")

    so, ho = statistical.overall, hybrid.overall
    summary = {
        "statistical": _metrics_dict(so),
        "hybrid": _metrics_dict(ho),
        "win_rate_change_pp": (None if so.win_rate is None or ho.win_rate is None
                               else 100.0 * (ho.win_rate - so.win_rate)),
        "avg_loss_reduction": loss_reduction(so.avg_loss, ho.avg_loss),
        "total_pnl_change": ho.total_pnl - so.total_pnl,
    }

    same_event = {}
    for label in ("same_event", "different_event"):
        s_row = statistical.breakdowns["same_event"][label]
        h_row = hybrid.breakdowns["same_event"][label]
        same_event[label] = {
            "statistical_avg_loss": s_row["avg_loss"],
            "hybrid_avg_loss": h_row["avg_loss"],
            "statistical_n_trades": s_row["n_trades"],
            "hybrid_n_trades": h_row["n_trades"],
            "loss_reduction": loss_reduction(s_row["avg_loss"],
                                             h_row["avg_loss"]),
        }

    leader_move = []
    for s_row, h_row in zip(statistical.breakdowns["leader_move"],
                            hybrid.breakdowns["leader_move"]):
        delta = (None if s_row["win_rate"] is None or h_row["win_rate"] is None
                 else 100.0 * (h_row["win_rate"] - s_row["win_rate"]))
        leader_move.append({
            "bucket": s_row["bucket"],
            "statistical_win_rate": s_row["win_rate"],
            "hybrid_win_rate": h_row["win_rate"],
            "win_rate_change_pp": delta,
        })

    ablation = []
    for s_row, h_row in zip(statistical.breakdowns["hold_ablation"],
                            hybrid.breakdowns["hold_ablation"]):
        sm, hm = s_row["metrics"], h_row["metrics"]
        ablation.append({
            "hold_days": s_row["hold_days"],
            "statistical": sm,
            "hybrid": hm,
            "loss_reduction": loss_reduction(sm["avg_loss"], hm["avg_loss"]),
            "total_pnl_change": hm["total_pnl"] - sm["total_pnl"],
        })

    return {
        "schema_version": 1,
        "summary": summary,
        "same_event": same_event,
        "leader_move": leader_move,
        "hold_ablation": ablation,
    }


def write_comparison_json(comparison: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(comparison, indent=2, sort_keys=True) + "\n")
