import json
from datetime import date, timedelta

import numpy as np
import pytest

from leadlag.backtest import TradeConfig, TradeRecord
from leadlag.config import (
    RerankConfig,
    RunConfig,
    ScreeningConfig,
    WindowConfig,
    load_config,
)
from leadlag.errors import InvalidParameter, NoWindows, UnknownMarket
from leadlag.evaluation import (
    EvaluationReport,
    Metrics,
    PortfolioEntry,
    WindowSpec,
    aggregate_metrics,
    compare_reports,
    filter_universe,
    loss_reduction,
    make_windows,
    report_to_dict,
    run_pipeline,
    write_report_json,
)
from leadlag.semantic import ScorerConfig
from leadlag.series import PriceSeries, inverse_log_odds
from leadlag.synth import default_metadata, planted_universe

from helpers import START, daily_dates, make_prices


def trade(pnl, same_event=None, move_pt=3.0, day=0):
    return TradeRecord(
        leader_id="L", follower_id="F",
        signal_date=START + timedelta(days=day),
        entry_date=START + timedelta(days=day + 1),
        exit_date=START + timedelta(days=day + 3),
        direction=1, entry_price=50.0, exit_price=50.0 + pnl / 100.0,
        leader_move_pt=move_pt, leader_move_rel=move_pt / 50.0,
        pnl=pnl, same_event=same_event)


class TestMakeWindows:
    def test_exactly_one_window_in_90_days(self):
        windows = make_windows(date(2024, 1, 1), date(2024, 3, 30))
        assert len(windows) == 1
        w = windows[0]
        assert w.train_start == date(2024, 1, 1)
        assert w.train_end == date(2024, 2, 29)
        assert w.test_start == date(2024, 3, 1)
        assert w.test_end == date(2024, 3, 30)

    def test_two_windows_in_120_days(self):
        windows = make_windows(date(2024, 1, 1), date(2024, 4, 29))
        assert [w.window_id for w in windows] == [0, 1]
        assert windows[1].train_start == date(2024, 1, 31)
        assert windows[1].test_end == date(2024, 4, 29)

    def test_89_days_is_too_short(self):
        with pytest.raises(NoWindows):
            make_windows(date(2024, 1, 1), date(2024, 3, 29))

    def test_custom_step(self):
        windows = make_windows(date(2024, 1, 1), date(2024, 5, 1),
                               train_days=30, test_days=10, step_days=10)
        assert len(windows) == 9
        starts = [w.train_start for w in windows]
        assert starts[1] - starts[0] == timedelta(days=10)

    def test_validation(self):
        with pytest.raises(InvalidParameter):
            make_windows(date(2024, 1, 2), date(2024, 1, 1))
        with pytest.raises(InvalidParameter):
            make_windows(date(2024, 1, 1), date(2024, 12, 31), train_days=0)

    def test_window_spec_bounds_checked(self):
        with pytest.raises(InvalidParameter):
            WindowSpec(0, date(2024, 2, 1), date(2024, 1, 1),
                       date(2024, 3, 1), date(2024, 3, 30))
        with pytest.raises(InvalidParameter):
            WindowSpec(0, date(2024, 1, 1), date(2024, 2, 1),
                       date(2024, 2, 1), date(2024, 3, 1))


WINDOW = WindowSpec(0, date(2024, 1, 1), date(2024, 2, 29),
                    date(2024, 3, 1), date(2024, 3, 30))


class TestFilterUniverse:
    def test_keeps_active_markets(self):
        rng = np.random.default_rng(0)
        lively = make_prices(np.clip(50 + np.cumsum(rng.normal(0, 2, 90)),
                                     1, 99), "lively")
        kept = filter_universe({"lively": lively}, WINDOW)
        assert [s.market_id for s in kept] == ["lively"]
        assert len(kept[0]) == 90  # full series, not the train slice

    def test_drops_flat_markets(self):
        flat = make_prices([50.0] * 90, "flat")
        assert filter_universe([flat], WINDOW) == []

    def test_drops_short_history(self):
        rng = np.random.default_rng(1)
        late = make_prices(np.clip(50 + np.cumsum(rng.normal(0, 2, 20)), 1, 99),
                           "late", start=date(2024, 2, 15))
        assert filter_universe([late], WINDOW, min_obs=30) == []

    def test_sorted_by_market_id(self):
        rng = np.random.default_rng(2)

        def walk(mid):
            return make_prices(np.clip(50 + np.cumsum(rng.normal(0, 2, 90)),
                                       1, 99), mid)

        kept = filter_universe([walk("b"), walk("a"), walk("c")], WINDOW)
        assert [s.market_id for s in kept] == ["a", "b", "c"]


class TestAggregateMetrics:
    def test_hand_case(self):
        m = aggregate_metrics([trade(700.0), trade(300.0), trade(-400.0),
                               trade(0.0)])
        assert (m.n_trades, m.n_wins, m.n_losses, m.n_zero) == (4, 2, 1, 1)
        assert m.win_rate == pytest.approx(2.0 / 3.0)  # zero-pnl excluded
        assert m.avg_win == pytest.approx(500.0)
        assert m.avg_loss == pytest.approx(-400.0)
        assert m.total_pnl == pytest.approx(600.0)

    def test_empty(self):
        m = aggregate_metrics([])
        assert m.n_trades == 0 and m.total_pnl == 0.0
        assert m.win_rate is None and m.avg_win is None and m.avg_loss is None

    def test_all_zero_pnl(self):
        m = aggregate_metrics([trade(0.0), trade(0.0)])
        assert m.n_trades == 2 and m.n_zero == 2
        assert m.win_rate is None


class TestPortfolioEntry:
    def _entry(self, **kw):
        return PortfolioEntry("L", "F", 1, 10.0, 0.001, sign=1, **kw)

    def test_statistical_sign(self):
        assert self._entry(strength="strong",
                           expected_sign=-1).trade_sign("statistical") == 1

    def test_semantic_sign(self):
        assert self._entry(strength="strong",
                           expected_sign=-1).trade_sign("semantic") == -1

    def test_semantic_without_verdict(self):
        with pytest.raises(InvalidParameter):
            self._entry().trade_sign("semantic")

    def test_unknown_source(self):
        with pytest.raises(InvalidParameter):
            self._entry().trade_sign("oracle")


class TestLossReduction:
    def test_basic(self):
        assert loss_reduction(-200.0, -150.0) == pytest.approx(0.25)

    def test_worse_is_negative(self):
        assert loss_reduction(-100.0, -130.0) == pytest.approx(-0.3)

    def test_none_handling(self):
        assert loss_reduction(None, -1.0) is None
        assert loss_reduction(-1.0, None) is None
        assert loss_reduction(0.0, -1.0) is None


def small_config(**kw):
    defaults = dict(
        screening=ScreeningConfig(k=10, lag_set=(1, 2), min_overlap=20,
                                  min_obs=20, min_std=0.05),
        rerank=RerankConfig(m=5, scorer=ScorerConfig(
            mode="stub", stub_default="moderate")),
        trading=TradeConfig(theta=0.0, hold_days=3),
        windows=WindowConfig(train_days=60, test_days=30, step_days=30),
        ablation_horizons=(3, 7),
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def small_universe(seed=0, days=90, n_markets=8, n_links=2):
    prices, metadata, links = planted_universe(
        seed, n_markets=n_markets, n_links=n_links, days=days,
        beta=0.8, lags=(2,), noise_std=0.1, vol=0.25)
    return prices, metadata, links


class TestRunPipeline:
    def test_statistical_report_shape(self):
        prices, metadata, _ = small_universe()
        report = run_pipeline(prices, metadata, small_config(), "statistical")
        assert len(report.windows) == 1
        w = report.windows[0]
        assert w.error is None
        assert w.n_markets == 8
        assert 1 <= len(w.portfolio) <= 5
        assert all(e.strength is None for e in w.portfolio)
        assert report.overall.n_trades == len(w.log.trades)

    def test_statistical_never_contacts_scorer(self):
        prices, metadata, _ = small_universe()
        config = small_config(rerank=RerankConfig(m=5, scorer=ScorerConfig(
            mode="live", endpoint_url="http://127.0.0.1:9/unreachable",
            max_retries=0, retry_backoff=0.0, timeout=0.2)))
        report = run_pipeline(prices, metadata, config, "statistical")
        assert report.windows[0].error is None
        assert report.scoring_failures == ()

    def test_hybrid_portfolio_carries_verdicts(self):
        prices, metadata, _ = small_universe()
        report = run_pipeline(prices, metadata, small_config(), "hybrid")
        assert all(e.strength == "moderate" for e in
                   report.windows[0].portfolio)

    def test_unknown_mode(self):
        prices, metadata, _ = small_universe()
        with pytest.raises(InvalidParameter):
            run_pipeline(prices, metadata, small_config(), "bayesian")

    def test_metadata_required_for_every_market(self):
        prices, metadata, _ = small_universe()
        del metadata["M0"]
        with pytest.raises(UnknownMarket):
            run_pipeline(prices, metadata, small_config(), "statistical")

    def test_window_error_recorded_not_fatal(self):
        prices, metadata, _ = small_universe()
        good = WindowSpec(0, START, START + timedelta(days=59),
                          START + timedelta(days=60), START + timedelta(days=89))
        # Trains entirely after the data ends: nothing survives filtering.
        barren = WindowSpec(1, date(2025, 1, 1), date(2025, 2, 28),
                            date(2025, 3, 1), date(2025, 3, 30))
        report = run_pipeline(prices, metadata, small_config(), "statistical",
                              windows=[good, barren])
        assert report.windows[0].error is None
        assert report.windows[1].error is not None
        assert report.windows[1].portfolio == ()
        assert report.overall.n_trades == report.windows[0].metrics.n_trades

    def test_post_cutoff_filters_windows(self):
        prices, metadata, _ = small_universe(days=120)
        config = small_config(windows=WindowConfig(
            train_days=60, test_days=30, step_days=30,
            post_cutoff_date=START + timedelta(days=60)))
        report = run_pipeline(prices, metadata, config, "statistical")
        assert [w.spec.window_id for w in report.windows] == [1]
        assert all(w.spec.test_start > config.windows.post_cutoff_date
                   for w in report.windows)

    def test_post_cutoff_can_empty_schedule(self):
        prices, metadata, _ = small_universe()
        config = small_config(windows=WindowConfig(
            train_days=60, test_days=30, step_days=30,
            post_cutoff_date=date(2030, 1, 1)))
        with pytest.raises(NoWindows):
            run_pipeline(prices, metadata, config, "statistical")

    def test_deterministic_reports(self):
        prices, metadata, _ = small_universe()
        a = run_pipeline(prices, metadata, small_config(), "hybrid")
        b = run_pipeline(prices, metadata, small_config(), "hybrid")
        assert json.dumps(report_to_dict(a), sort_keys=True) == \
            json.dumps(report_to_dict(b), sort_keys=True)

    def test_uniform_stub_matches_statistical_bytes(self, tmp_path):
        prices, metadata, _ = small_universe()
        stat = run_pipeline(prices, metadata, small_config(), "statistical")
        hyb = run_pipeline(prices, metadata, small_config(), "hybrid")
        p1, p2 = tmp_path / "stat.json", tmp_path / "hyb.json"
        write_report_json(stat, p1)
        write_report_json(hyb, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_scoring_failures_degrade_and_are_logged(self, tmp_path):
        prices, metadata, _ = small_universe()
        config = small_config(rerank=RerankConfig(m=5, scorer=ScorerConfig(
            mode="replay", cache_path=str(tmp_path / "empty.jsonl"))))
        report = run_pipeline(prices, metadata, config, "hybrid")
        assert report.windows[0].error is None
        assert len(report.scoring_failures) == report.windows[0].n_candidates
        assert all(f["window_id"] == 0 for f in report.scoring_failures)
        assert all(e.strength == "none" for e in report.windows[0].portfolio)

    def test_still_nonstationary_market_flagged(self):
        prices, metadata, _ = small_universe()
        rng = np.random.default_rng(1)
        path = np.cumsum(np.cumsum(np.cumsum(rng.standard_normal(90))))
        path *= 6.0 / np.abs(path).max()  # thrice-integrated noise, in range
        stubborn = inverse_log_odds(path)
        prices = dict(prices)
        prices["XX"] = PriceSeries("XX", daily_dates(90), stubborn)
        metadata = dict(metadata)
        metadata["XX"] = default_metadata("XX")
        report = run_pipeline(prices, metadata, small_config(), "statistical")
        flagged = {f["market_id"] for f in report.stationarity_flags}
        assert "XX" in flagged

    def test_semantic_sign_source_flips_direction(self):
        prices, metadata, links = small_universe(seed=3, n_markets=2,
                                                 n_links=1, days=120)
        table = {("M0", "M1"): ("strong", -1)}
        base = dict(
            screening=ScreeningConfig(k=3, lag_set=(1, 2), min_overlap=20,
                                      min_obs=20, min_std=0.05),
            windows=WindowConfig(train_days=60, test_days=30, step_days=60),
            ablation_horizons=(3,),
        )
        stat_cfg = RunConfig(
            rerank=RerankConfig(m=1, scorer=ScorerConfig(mode="stub",
                                                         stub_table=table)),
            trading=TradeConfig(hold_days=3, sign_source="statistical"),
            **base)
        sem_cfg = RunConfig(
            rerank=RerankConfig(m=1, scorer=ScorerConfig(mode="stub",
                                                         stub_table=table)),
            trading=TradeConfig(hold_days=3, sign_source="semantic"),
            **base)
        by_stat = run_pipeline(prices, metadata, stat_cfg, "hybrid")
        by_sem = run_pipeline(prices, metadata, sem_cfg, "hybrid")
        entry = by_stat.windows[0].portfolio[0]
        assert entry.sign == 1  # statistically recovered planted sign
        assert entry.expected_sign == -1
        stat_pnls = [t.pnl for t in by_stat.all_trades()]
        sem_pnls = [t.pnl for t in by_sem.all_trades()]
        assert stat_pnls and sem_pnls == [-p for p in stat_pnls]

    def test_statistical_mode_with_semantic_sign_source_rejected(self):
        prices, metadata, _ = small_universe()
        config = small_config(trading=TradeConfig(hold_days=3,
                                                  sign_source="semantic"))
        with pytest.raises(InvalidParameter):
            run_pipeline(prices, metadata, config, "statistical")


@pytest.fixture(scope="module")
def breakdown_report():
    prices, metadata, _ = small_universe(seed=1)
    return run_pipeline(prices, metadata, small_config(), "statistical")


class TestBreakdowns:
    @pytest.fixture
    def report(self, breakdown_report):
        return breakdown_report

    def test_same_event_partition(self, report):
        rows = report.breakdowns["same_event"]
        labelled = rows["same_event"]["n_trades"] + \
            rows["different_event"]["n_trades"]
        unlabelled = sum(t.same_event is None for t in report.all_trades())
        assert labelled + unlabelled == report.overall.n_trades
        assert unlabelled == 0  # synthetic metadata always carries a group

    def test_leader_move_partition(self, report):
        rows = report.breakdowns["leader_move"]
        assert [r["bucket"] for r in rows] == ["0-5pt", "5-10pt", "10pt+"]
        assert sum(r["n_trades"] for r in rows) == report.overall.n_trades

    def test_hold_ablation_includes_base_horizon(self, report):
        rows = report.breakdowns["hold_ablation"]
        assert [r["hold_days"] for r in rows] == [3, 7]
        base = next(r for r in rows if r["hold_days"] == 3)
        assert base["metrics"]["n_trades"] == report.overall.n_trades
        assert base["metrics"]["total_pnl"] == \
            pytest.approx(report.overall.total_pnl)

    def test_ablation_horizon_changes_trades(self, report):
        rows = report.breakdowns["hold_ablation"]
        longer = next(r for r in rows if r["hold_days"] == 7)
        # Longer holds run off the end of the test window more often.
        assert longer["n_skips"] >= 0
        assert longer["metrics"]["n_trades"] <= report.overall.n_trades


@pytest.fixture(scope="module")
def hybrid_report():
    prices, metadata, _ = small_universe(seed=2)
    return run_pipeline(prices, metadata, small_config(), "hybrid")


class TestReportSerialization:
    @pytest.fixture
    def report(self, hybrid_report):
        return hybrid_report

    def test_shape(self, report):
        d = report_to_dict(report)
        assert d["schema_version"] == 1
        assert set(d) == {"schema_version", "config", "windows", "overall",
                          "breakdowns", "scoring_failures",
                          "stationarity_flags"}
        w = d["windows"][0]
        assert w["train_start"] == "2024-01-01"
        assert w["n_skips"] == len(report.windows[0].log.skips)

    def test_no_mode_label_or_verdicts_in_payload(self, report):
        d = report_to_dict(report)
        assert "mode" not in d  # no selection-mode label at the top level
        windows_text = json.dumps(d["windows"])
        assert '"strength"' not in windows_text
        assert '"expected_sign"' not in windows_text

    def test_written_file_parses_and_sorts_keys(self, report, tmp_path):
        path = tmp_path / "report.json"
        write_report_json(report, path)
        text = path.read_text()
        assert text.endswith("\n")
        parsed = json.loads(text)
        assert parsed == json.loads(
            json.dumps(report_to_dict(report), sort_keys=True))


@pytest.fixture(scope="module")
def report_pair():
    prices, metadata, _ = small_universe(seed=4)
    stat = run_pipeline(prices, metadata, small_config(), "statistical")
    hyb_cfg = small_config(rerank=RerankConfig(m=5, scorer=ScorerConfig(
        mode="stub", stub_default="weak")))
    hyb = run_pipeline(prices, metadata, hyb_cfg, "hybrid")
    return stat, hyb


class TestCompareReports:
    @pytest.fixture
    def pair(self, report_pair):
        return report_pair

    def test_summary_fields(self, pair):
        stat, hyb = pair
        cmp = compare_reports(stat, hyb)
        assert cmp["summary"]["total_pnl_change"] == pytest.approx(
            hyb.overall.total_pnl - stat.overall.total_pnl)
        if stat.overall.avg_loss and hyb.overall.avg_loss:
            expected = 1.0 - abs(hyb.overall.avg_loss) / abs(stat.overall.avg_loss)
            assert cmp["summary"]["avg_loss_reduction"] == \
                pytest.approx(expected, abs=1e-9)

    def test_window_schedule_mismatch(self, pair):
        stat, _ = pair
        prices, metadata, _ = small_universe(seed=4, days=120)
        other = run_pipeline(prices, metadata, small_config(), "statistical")
        with pytest.raises(InvalidParameter):
            compare_reports(stat, other)

    def test_tables_line_up(self, pair):
        cmp = compare_reports(*pair)
        assert [r["bucket"] for r in cmp["leader_move"]] == \
            ["0-5pt", "5-10pt", "10pt+"]
        assert [r["hold_days"] for r in cmp["hold_ablation"]] == [3, 7]
        assert set(cmp["same_event"]) == {"same_event", "different_event"}
