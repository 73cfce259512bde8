"""Command-line interface.

Subcommands mirror the pipeline stages so any run can be reproduced or
resumed piecemeal:

    simulate   scenario JSON -> synthetic prices CSV + metadata JSON
    screen     prices -> ranked candidate pairs (JSON)
    rerank     candidates + metadata -> traded portfolio (JSON)
    backtest   portfolio + prices -> trade log (CSV)
    evaluate   prices + metadata -> rolling-window report(s)
    report     pretty-print the JSON artifacts of an evaluate run

`evaluate` is exactly the composition of screen, rerank, and backtest
over the rolling window schedule; the standalone stages exist for
debugging and for wiring into other tooling.  Exit codes: 0 success, 2
usage or configuration error, 1 anything else (with a diagnostic on
stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from pathlib import Path

from .backtest import run_backtest, write_trade_log_csv
from .config import RunConfig, load_config
from .errors import InvalidParameter, LeadLagError, SchemaError
from .evaluation import (
    EvaluationReport,
    PortfolioEntry,
    WindowSpec,
    aggregate_metrics,
    compare_reports,
    filter_universe,
    run_pipeline,
    write_comparison_json,
    write_report_json,
    _prepare_signals,
    report_to_dict,
)
from .granger import GrangerResult, RankedCandidates, screen_pairs
from .ingest import load_metadata, load_prices, write_metadata_json, write_prices_csv
from .semantic import rerank as semantic_rerank
from .semantic import score_candidates
from .synth import build_universe, load_scenario


class _UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


def _parse_lags(text: str) -> tuple[int, ...]:
    try:
        lags = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lag list {text!r}") from None
    if not lags:
        raise argparse.ArgumentTypeError("lag list is empty")
    return lags


def _parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad date {text!r} (want YYYY-MM-DD)") from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")


def _add_scorer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer-mode", choices=["live", "stub", "replay"],
                   help="how verdicts are obtained (default: config value)")
    p.add_argument("--cache", help="JSONL response cache path")
    p.add_argument("--stub-strength",
                   choices=["none", "weak", "moderate", "strong"],
                   help="uniform strength for stub mode")
    p.add_argument("--endpoint", help="chat-completions endpoint URL")
    p.add_argument("--model", help="model name sent to the endpoint")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with explicit flag overrides."""
    overrides: dict = {}

    def put(section: str, key: str, value) -> None:
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    k_override = getattr(args, "k", None)
    if k_override is not None and getattr(args, "m", None) is None:
        # Keep the M <= K invariant when only K is lowered on the command
        # line; M rides down with it.
        try:
            base = load_config(getattr(args, "config", None))
        except (SchemaError, InvalidParameter) as exc:
            raise _UsageError(str(exc)) from exc
        except FileNotFoundError as exc:
            raise _UsageError(f"config file not found: {exc.filename}") from exc
        if base.rerank.m > k_override:
            overrides.setdefault("rerank", {})["m"] = k_override

    put("screening", "k", getattr(args, "k", None))
    lags = getattr(args, "lags", None)
    if lags is not None:
        overrides.setdefault("screening", {})["lag_set"] = list(lags)
    put("screening", "min_overlap", getattr(args, "min_overlap", None))
    put("rerank", "m", getattr(args, "m", None))
    put("trading", "theta", getattr(args, "theta", None))
    put("trading", "hold_days", getattr(args, "hold_days", None))
    put("trading", "position_size", getattr(args, "position_size", None))
    put("trading", "sign_source", getattr(args, "sign_source", None))
    put("windows", "train_days", getattr(args, "train_days", None))
    put("windows", "test_days", getattr(args, "test_days", None))
    put("windows", "step_days", getattr(args, "step_days", None))
    cutoff = getattr(args, "post_cutoff", None)
    if cutoff is not None:
        overrides.setdefault("windows", {})["post_cutoff_date"] = cutoff.isoformat()

    scorer: dict = {}
    if getattr(args, "scorer_mode", None) is not None:
        scorer["mode"] = args.scorer_mode
    if getattr(args, "cache", None) is not None:
        scorer["cache_path"] = args.cache
    if getattr(args, "stub_strength", None) is not None:
        scorer["stub_default"] = args.stub_strength
    if getattr(args, "endpoint", None) is not None:
        scorer["endpoint_url"] = args.endpoint
    if getattr(args, "model", None) is not None:
        scorer["model_name"] = args.model
    if scorer:
        overrides.setdefault("rerank", {})["scorer"] = scorer

    try:
        return load_config(getattr(args, "config", None), overrides)
    except (SchemaError, InvalidParameter) as exc:
        raise _UsageError(str(exc)) from exc
    except FileNotFoundError as exc:
        raise _UsageError(f"config file not found: {exc.filename}") from exc


# ---------------------------------------------------------------- simulate

def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    prices, metadata, links = build_universe(scenario)
    write_prices_csv(prices, args.out_prices)
    write_metadata_json(metadata, args.out_metadata)
    if args.out_links:
        records = [{"leader_id": ln.leader_id, "follower_id": ln.follower_id,
                    "lag": ln.lag, "beta": ln.beta, "sign": ln.sign,
                    "noise_std": ln.noise_std, "co_move": ln.co_move}
                   for ln in links]
        Path(args.out_links).write_text(
            json.dumps(records, indent=2, sort_keys=True) + "\n")
    print(f"simulated {len(prices)} markets "
          f"({len(links)} planted links) -> {args.out_prices}")
    return 0


# ------------------------------------------------------------------ screen

def _candidates_to_json(candidates: RankedCandidates,
                        train_start: date, train_end: date) -> dict:
    return {
        "schema_version": 1,
        "window_id": candidates.window_id,
        "train_start": train_start.isoformat(),
        "train_end": train_end.isoformat(),
        "candidates": [{
            "leader_id": r.leader_id, "follower_id": r.follower_id,
            "lag": r.lag, "f_statistic": r.f_statistic,
            "p_value": r.p_value, "sign": r.sign,
        } for r in candidates],
    }


def _candidates_from_json(path) -> tuple[RankedCandidates, dict]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "candidates" not in doc:
        raise SchemaError(f"{path}: not a candidates document")
    results = []
    for idx, row in enumerate(doc["candidates"]):
        try:
            results.append(GrangerResult(
                leader_id=row["leader_id"], follower_id=row["follower_id"],
                lag=int(row["lag"]), f_statistic=float(row["f_statistic"]),
                p_value=float(row["p_value"]), sign=int(row["sign"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad candidate #{idx}: {exc}") from exc
    return RankedCandidates(tuple(results),
                            window_id=int(doc.get("window_id", 0))), doc


def _cmd_screen(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    prices = load_prices(args.prices)
    all_dates = sorted({d for s in prices.values() for d in s.dates})
    train_start = args.train_start or all_dates[0]
    train_end = args.train_end or all_dates[-1]
    if train_start > train_end:
        raise _UsageError(f"--train-start {train_start} is after "
                          f"--train-end {train_end}")
    window = WindowSpec(0, train_start, train_end,
                        train_end + (date.resolution), train_end + date.resolution)
    scr = config.screening
    kept = filter_universe(prices, window, scr.min_obs, scr.min_std)
    signals, flagged = _prepare_signals(kept, window, scr.clip_epsilon,
                                        scr.max_diffs)
    candidates = screen_pairs(signals, scr.lag_set, scr.k,
                              min_overlap=scr.min_overlap)
    doc = _candidates_to_json(candidates, train_start, train_end)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for f in flagged:
        print(f"note: {f['market_id']}: {f['issue']}", file=sys.stderr)
    print(f"screened {len(kept)} markets -> {len(candidates)} candidates "
          f"-> {args.out}")
    return 0


# ------------------------------------------------------------------ rerank

def _portfolio_to_json(entries: list[PortfolioEntry], mode: str) -> dict:
    return {
        "schema_version": 1,
        "mode": mode,
        "entries": [{
            "leader_id": e.leader_id, "follower_id": e.follower_id,
            "lag": e.lag, "f_statistic": e.f_statistic, "p_value": e.p_value,
            "sign": e.sign, "strength": e.strength,
            "expected_sign": e.expected_sign,
        } for e in entries],
    }


def _portfolio_from_json(path) -> list[PortfolioEntry]:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "entries" not in doc:
        raise SchemaError(f"{path}: not a portfolio document")
    entries = []
    for idx, row in enumerate(doc["entries"]):
        try:
            entries.append(PortfolioEntry(
                leader_id=row["leader_id"], follower_id=row["follower_id"],
                lag=int(row["lag"]), f_statistic=float(row["f_statistic"]),
                p_value=float(row["p_value"]), sign=int(row["sign"]),
                strength=row.get("strength"),
                expected_sign=(None if row.get("expected_sign") is None
                               else int(row["expected_sign"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad entry #{idx}: {exc}") from exc
    return entries


def _cmd_rerank(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    candidates, _ = _candidates_from_json(args.candidates)
    m = config.rerank.m
    if args.mode == "statistical":
        chosen = candidates.top(m)
        entries = [PortfolioEntry(r.leader_id, r.follower_id, r.lag,
                                  r.f_statistic, r.p_value, r.sign)
                   for r in chosen]
    else:
        metadata = load_metadata(args.metadata)
        verdicts, failures = score_candidates(config.rerank.scorer,
                                              candidates, metadata)
        chosen = semantic_rerank(candidates, verdicts, m)
        entries = []
        for r in chosen:
            v = verdicts[(r.leader_id, r.follower_id)]
            entries.append(PortfolioEntry(r.leader_id, r.follower_id, r.lag,
                                          r.f_statistic, r.p_value, r.sign,
                                          strength=v.strength,
                                          expected_sign=v.expected_sign))
        for f in failures:
            print(f"note: scoring failed for ({f['leader_id']} -> "
                  f"{f['follower_id']}): {f['reason']}", file=sys.stderr)
    doc = _portfolio_to_json(entries, args.mode)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"selected {len(entries)} of {len(candidates)} candidates "
          f"({args.mode}) -> {args.out}")
    return 0


# ---------------------------------------------------------------- backtest

def _cmd_backtest(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    entries = _portfolio_from_json(args.portfolio)
    prices = load_prices(args.prices)
    event_groups = None
    if args.metadata:
        metadata = load_metadata(args.metadata)
        event_groups = {mid: m.event_group for mid, m in metadata.items()}
    triples = [(e.leader_id, e.follower_id,
                e.trade_sign(config.trading.sign_source)) for e in entries]
    log = run_backtest(triples, prices, (args.test_start, args.test_end),
                       config.trading, event_groups=event_groups)
    write_trade_log_csv(log, args.out)
    m = aggregate_metrics(log)
    wr = "n/a" if m.win_rate is None else f"{100.0 * m.win_rate:.1f}%"
    print(f"{m.n_trades} trades ({len(log.skips)} skipped), win rate {wr}, "
          f"total pnl {m.total_pnl:.1f} -> {args.out}")
    return 0


# ---------------------------------------------------------------- evaluate

def _report_paths(out_dir: Path, mode: str) -> tuple[Path, Path]:
    return (out_dir / f"report_{mode}.json", out_dir / f"trades_{mode}.csv")


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    prices = load_prices(args.prices)
    metadata = load_metadata(args.metadata)
    out_dir = Path(args.out_dir)
    modes = ["statistical", "hybrid"] if args.mode == "both" else [args.mode]
    reports: dict[str, EvaluationReport] = {}
    for mode in modes:
        report = run_pipeline(prices, metadata, config, mode)
        reports[mode] = report
        report_path, trades_path = _report_paths(out_dir, mode)
        write_report_json(report, report_path)
        write_trade_log_csv(report.combined_log(), trades_path)
        m = report.overall
        wr = "n/a" if m.win_rate is None else f"{100.0 * m.win_rate:.1f}%"
        print(f"{mode}: {len(report.windows)} windows, {m.n_trades} trades, "
              f"win rate {wr}, total pnl {m.total_pnl:.1f}")
    if len(modes) == 2:
        comparison = compare_reports(reports["statistical"], reports["hybrid"])
        write_comparison_json(comparison, out_dir / "comparison.json")
        print(f"comparison -> {out_dir / 'comparison.json'}")
    return 0


# ------------------------------------------------------------------ report

def _fmt(value, pct: bool = False, money: bool = False) -> str:
    if value is None:
        return "n/a"
    if pct:
        return f"{100.0 * value:.1f}%"
    if money:
        return f"{value:,.0f}"
    return f"{value:.3f}"


def _print_table(title: str, headers: list[str], rows: list[list[str]]) -> None:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    print(f"\n{title}")
    print("  " + "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    print("  " + "  ".join("-" * w for w in widths))
    for row in rows:
        print("  " + "  ".join(cell.ljust(widths[i])
                               for i, cell in enumerate(row)))


def _metrics_row(label: str, m: dict) -> list[str]:
    return [label, str(m["n_trades"]), _fmt(m["win_rate"], pct=True),
            _fmt(m["avg_win"], money=True), _fmt(m["avg_loss"], money=True),
            _fmt(m["total_pnl"], money=True)]


def _cmd_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.dir)
    found = False
    metric_headers = ["mode", "trades", "win rate", "avg win", "avg loss",
                      "total pnl"]
    rows = []
    for mode in ("statistical", "hybrid"):
        path = out_dir / f"report_{mode}.json"
        if not path.exists():
            continue
        found = True
        doc = json.loads(path.read_text())
        rows.append(_metrics_row(mode, doc["overall"]))
    if rows:
        _print_table("Overall", metric_headers, rows)

    comparison_path = out_dir / "comparison.json"
    if comparison_path.exists():
        found = True
        comp = json.loads(comparison_path.read_text())
        summary = comp["summary"]
        print(f"\n  win rate change: "
              f"{_fmt(summary['win_rate_change_pp'])} pp"
              f" | avg loss reduction: "
              f"{_fmt(summary['avg_loss_reduction'], pct=True)}"
              f" | total pnl change: "
              f"{_fmt(summary['total_pnl_change'], money=True)}")
        rows = []
        for label in ("same_event", "different_event"):
            row = comp["same_event"][label]
            rows.append([label,
                         _fmt(row["statistical_avg_loss"], money=True),
                         _fmt(row["hybrid_avg_loss"], money=True),
                         _fmt(row["loss_reduction"], pct=True)])
        _print_table("Average loss by event relation",
                     ["slice", "statistical", "hybrid", "reduction"], rows)
        rows = []
        for row in comp["leader_move"]:
            rows.append([row["bucket"],
                         _fmt(row["statistical_win_rate"], pct=True),
                         _fmt(row["hybrid_win_rate"], pct=True),
                         "n/a" if row["win_rate_change_pp"] is None
                         else f"{row['win_rate_change_pp']:+.1f}pp"])
        _print_table("Win rate by leader move",
                     ["bucket", "statistical", "hybrid", "change"], rows)
        rows = []
        for row in comp["hold_ablation"]:
            rows.append([str(row["hold_days"]),
                         _fmt(row["statistical"]["win_rate"], pct=True),
                         _fmt(row["hybrid"]["win_rate"], pct=True),
                         _fmt(row["statistical"]["avg_loss"], money=True),
                         _fmt(row["hybrid"]["avg_loss"], money=True),
                         _fmt(row["loss_reduction"], pct=True)])
        _print_table("Holding-horizon sweep",
                     ["hold", "stat WR", "hyb WR", "stat avg loss",
                      "hyb avg loss", "loss red."], rows)

    if not found:
        print(f"error: no report artifacts in {out_dir}", file=sys.stderr)
        return 1
    return 0


# ------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leadlag",
        description="Lead-lag discovery and trading evaluation for "
                    "prediction-market price series.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="generate a synthetic universe")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out-prices", required=True)
    p.add_argument("--out-metadata", required=True)
    p.add_argument("--out-links", help="optional ground-truth links JSON")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("screen", help="rank candidate lead-lag pairs")
    p.add_argument("--prices", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-start", type=_parse_date)
    p.add_argument("--train-end", type=_parse_date)
    p.add_argument("--k", type=int)
    p.add_argument("--lags", type=_parse_lags, help="comma-separated, e.g. 1,2,3")
    p.add_argument("--min-overlap", type=int)
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_screen)

    p = sub.add_parser("rerank", help="select the traded portfolio")
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["statistical", "hybrid"],
                   default="hybrid")
    p.add_argument("--metadata", help="required for hybrid mode")
    p.add_argument("--m", type=int)
    _add_scorer_flags(p)
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_rerank)

    p = sub.add_parser("backtest", help="trade a portfolio over a window")
    p.add_argument("--portfolio", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--test-start", type=_parse_date, required=True)
    p.add_argument("--test-end", type=_parse_date, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metadata")
    p.add_argument("--theta", type=float)
    p.add_argument("--hold-days", type=int)
    p.add_argument("--position-size", type=float)
    p.add_argument("--sign-source", choices=["statistical", "semantic"])
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_backtest)

    p = sub.add_parser("evaluate", help="full rolling-window evaluation")
    p.add_argument("--prices", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mode", choices=["statistical", "hybrid", "both"],
                   default="both")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--lags", type=_parse_lags)
    p.add_argument("--min-overlap", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--hold-days", type=int)
    p.add_argument("--position-size", type=float)
    p.add_argument("--sign-source", choices=["statistical", "semantic"])
    p.add_argument("--train-days", type=int)
    p.add_argument("--test-days", type=int)
    p.add_argument("--step-days", type=int)
    p.add_argument("--post-cutoff", type=_parse_date,
                   help="keep only test windows starting after this date")
    _add_scorer_flags(p)
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("report", help="print tables from evaluate artifacts")
    p.add_argument("--dir", required=True)
    p.set_defaults(handler=_cmd_report)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    if args.command == "rerank" and args.mode == "hybrid" and not args.metadata:
        print("error: rerank --mode hybrid requires --metadata", file=sys.stderr)
        return 2
    try:
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        name = getattr(exc, "filename", None) or exc
        print(f"error: file not found: {name}", file=sys.stderr)
        return 1
    except LeadLagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
