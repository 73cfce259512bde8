"""Synthetic prediction-market generator with plantable lead-lag links.

Markets are simulated as Gaussian random walks in log-odds space and
mapped through the logistic function, so prices stay strictly inside
(0, 100) and the log-odds transform recovers the walk exactly (up to the
clamp).  A planted link makes a follower's log-odds innovations echo its
leader's with a configurable lag, coefficient, and sign:

    g_t = sign * beta * (e_{t-lag} + co_move * e_t) + eta_t

where e is the leader innovation sequence and eta is fresh noise.  The
lagged term is what a causality screen should detect; the co_move share
leaks a fraction of the same shock in contemporaneously, which pins down
the co-movement sign (a pure-lag link leaves the contemporaneous
correlation near zero and the recovered sign would be a coin flip).

Everything is deterministic in the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import InsufficientData, InvalidParameter, SchemaError, UnknownMarket
from .semantic import EventMetadata
from .series import PriceSeries, inverse_log_odds

# Log-odds are clipped here before the logistic map so float rounding can
# never push a price onto the 0/100 poles.
_LOG_ODDS_CAP = 30.0

DEFAULT_START_DATE = date(2024, 1, 1)


@dataclass(frozen=True)
class PlantedLink:
    """Ground-truth directed dependency between two synthetic markets."""

    leader_id: str
    follower_id: str
    lag: int
    beta: float
    sign: int
    noise_std: float
    co_move: float = 0.5

    def __post_init__(self):
        if self.leader_id == self.follower_id:
            raise InvalidParameter("a market cannot lead itself")
        if self.lag < 1:
            raise InvalidParameter(f"lag must be >= 1, got {self.lag}")
        if self.sign not in (-1, 1):
            raise InvalidParameter(f"sign must be -1 or +1, got {self.sign}")
        if self.noise_std <= 0.0:
            raise InvalidParameter(f"noise_std must be > 0, got {self.noise_std}")
        if self.co_move < 0.0:
            raise InvalidParameter(f"co_move must be >= 0, got {self.co_move}")


def _logit_pct(prices: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(prices, dtype=np.float64), 1e-9, 100.0 - 1e-9)
    return np.log(p / (100.0 - p))


def _walk_to_prices(log_odds_path: np.ndarray) -> np.ndarray:
    return inverse_log_odds(np.clip(log_odds_path, -_LOG_ODDS_CAP, _LOG_ODDS_CAP))


def generate_market(seed, days: int, base_prob: float = 50.0, vol: float = 0.1,
                    market_id: str | None = None,
                    start_date: date = DEFAULT_START_DATE) -> PriceSeries:
    """Simulate one independent market.

    Args:
        seed: Anything numpy's default_rng accepts (int or SeedSequence).
        days: Number of daily observations, >= 2.
        base_prob: Starting price in percentage points, strictly in (0, 100).
        vol: Standard deviation of daily log-odds innovations, >= 0.
    """
    if days < 2:
        raise InvalidParameter(f"days must be >= 2, got {days}")
    if not 0.0 < base_prob < 100.0:
        raise InvalidParameter(f"base_prob must be in (0, 100), got {base_prob}")
    if vol < 0.0:
        raise InvalidParameter(f"vol must be >= 0, got {vol}")
    rng = np.random.default_rng(seed)
    steps = vol * rng.standard_normal(days - 1)
    path = np.empty(days)
    path[0] = float(_logit_pct(np.array([base_prob]))[0])
    path[1:] = path[0] + np.cumsum(steps)
    dates = tuple(start_date + timedelta(days=i) for i in range(days))
    mid = market_id if market_id is not None else f"SIM-{seed}"
    return PriceSeries(mid, dates, _walk_to_prices(path))


def plant_leadlag(leader: PriceSeries, link: PlantedLink, seed,
                  base_prob: float = 50.0) -> PriceSeries:
    """Build the follower series of a planted link from its leader.

    The follower shares the leader's date grid.  Its innovations echo the
    leader's as described in the module docstring, so the true direction,
    lag, and sign are known by construction.
    """
    if link.leader_id != leader.market_id:
        raise UnknownMarket(f"link names leader {link.leader_id!r} but series "
                            f"is {leader.market_id!r}")
    if len(leader) <= link.lag + 2:
        raise InsufficientData(
            f"leader has {len(leader)} observations; need > {link.lag + 2} "
            f"to plant a lag-{link.lag} link")
    if not 0.0 < base_prob < 100.0:
        raise InvalidParameter(f"base_prob must be in (0, 100), got {base_prob}")
    e = np.diff(_logit_pct(leader.prices))
    rng = np.random.default_rng(seed)
    eta = link.noise_std * rng.standard_normal(len(e))
    lagged = np.zeros_like(e)
    lagged[link.lag:] = e[:-link.lag]
    g = link.sign * link.beta * (lagged + link.co_move * e) + eta
    path = np.empty(len(leader))
    path[0] = float(_logit_pct(np.array([base_prob]))[0])
    path[1:] = path[0] + np.cumsum(g)
    return PriceSeries(link.follower_id, leader.dates, _walk_to_prices(path))


def _market_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=[int(master_seed), int(index)])


def _link_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=[int(master_seed), 10_000 + int(index)])


def default_metadata(market_id: str, title: str | None = None,
                     description: str | None = None,
                     event_group: str | None = None) -> EventMetadata:
    return EventMetadata(
        market_id=market_id,
        title=title or f"Synthetic market {market_id}",
        description=description or (
            f"Simulated event-probability series for market {market_id}."),
        event_group=event_group or market_id,
    )


def build_universe(scenario: dict) -> tuple[dict[str, PriceSeries],
                                            dict[str, EventMetadata],
                                            list[PlantedLink]]:
    """Materialize a scenario description into series and metadata.

    Scenario schema (JSON-compatible dict):

        {"seed": int, "days": int, "start_date": "YYYY-MM-DD"?,
         "markets": [{"market_id": str, "base_prob"?: float, "vol"?: float,
                      "title"?: str, "description"?: str, "event_group"?: str}],
         "links": [{"leader_id": str, "follower_id": str, "lag": int,
                    "beta": float, "sign": -1|1, "noise_std": float,
                    "co_move"?: float}]}

    Followers named by links are regenerated from their leaders; links are
    processed in listed order, so a leader must be defined before any link
    that consumes it.
    """
    for field in ("seed", "days", "markets"):
        if field not in scenario:
            raise SchemaError(f"scenario is missing required field {field!r}")
    seed = int(scenario["seed"])
    days = int(scenario["days"])
    start = (date.fromisoformat(scenario["start_date"])
             if "start_date" in scenario else DEFAULT_START_DATE)
    specs = scenario["markets"]
    if not isinstance(specs, list) or not specs:
        raise SchemaError("scenario 'markets' must be a non-empty list")

    links: list[PlantedLink] = []
    for raw in scenario.get("links", []):
        try:
            links.append(PlantedLink(
                leader_id=raw["leader_id"], follower_id=raw["follower_id"],
                lag=int(raw["lag"]), beta=float(raw["beta"]),
                sign=int(raw["sign"]), noise_std=float(raw["noise_std"]),
                co_move=float(raw.get("co_move", 0.5))))
        except KeyError as exc:
            raise SchemaError(f"link is missing field {exc.args[0]!r}") from exc
    follower_ids = {ln.follower_id for ln in links}
    if len(follower_ids) != len(links):
        raise SchemaError("each market may be the follower of at most one link")

    prices: dict[str, PriceSeries] = {}
    metadata: dict[str, EventMetadata] = {}
    base_probs: dict[str, float] = {}
    for idx, spec in enumerate(specs):
        if "market_id" not in spec:
            raise SchemaError(f"market #{idx} is missing 'market_id'")
        mid = spec["market_id"]
        if mid in prices:
            raise SchemaError(f"duplicate market_id {mid!r} in scenario")
        base = float(spec.get("base_prob", 50.0))
        base_probs[mid] = base
        metadata[mid] = default_metadata(mid, spec.get("title"),
                                         spec.get("description"),
                                         spec.get("event_group"))
        if mid in follower_ids:
            continue  # built from its leader below
        prices[mid] = generate_market(_market_seed(seed, idx), days,
                                      base_prob=base,
                                      vol=float(spec.get("vol", 0.1)),
                                      market_id=mid, start_date=start)

    for lidx, link in enumerate(links):
        if link.leader_id not in prices:
            raise UnknownMarket(
                f"link #{lidx} needs leader {link.leader_id!r} before it is built")
        if link.follower_id not in metadata:
            raise UnknownMarket(
                f"link #{lidx} follower {link.follower_id!r} is not in 'markets'")
        prices[link.follower_id] = plant_leadlag(
            prices[link.leader_id], link, _link_seed(seed, lidx),
            base_prob=base_probs[link.follower_id])

    return prices, metadata, links


def load_scenario(path) -> dict:
    """Read and structurally validate a scenario JSON file."""
    text = Path(path).read_text()
    try:
        scenario = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(scenario, dict):
        raise SchemaError(f"{path}: scenario must be a JSON object")
    return scenario


def planted_universe(seed: int, n_markets: int, n_links: int, days: int,
                     beta: float = 0.8, lags: tuple[int, ...] = (1, 2),
                     noise_std: float = 0.1, vol: float = 0.25,
                     co_move: float = 0.5, extra_vol: float | None = None,
                     start_date: date = DEFAULT_START_DATE,
                     ) -> tuple[dict[str, PriceSeries],
                                dict[str, EventMetadata],
                                list[PlantedLink]]:
    """Convenience builder: n_links disjoint leader/follower pairs.

    Market 2i leads market 2i+1 for i < n_links; remaining markets are
    independent, at volatility extra_vol when given (vol otherwise).
    Link signs alternate +1/-1 and lags cycle through `lags`.
    """
    if n_links * 2 > n_markets:
        raise InvalidParameter(
            f"{n_links} disjoint links need {n_links * 2} markets, "
            f"got {n_markets}")
    width = len(str(max(n_markets - 1, 1)))
    ids = [f"M{str(i).zfill(width)}" for i in range(n_markets)]
    scenario: dict = {"seed": seed, "days": days,
                      "start_date": start_date.isoformat(),
                      "markets": [], "links": []}
    for i, mid in enumerate(ids):
        linked = i < 2 * n_links
        v = vol if (linked or extra_vol is None) else extra_vol
        scenario["markets"].append({"market_id": mid, "base_prob": 50.0,
                                    "vol": v})
    for j in range(n_links):
        scenario["links"].append({
            "leader_id": ids[2 * j], "follower_id": ids[2 * j + 1],
            "lag": lags[j % len(lags)], "beta": beta,
            "sign": 1 if j % 2 == 0 else -1,
            "noise_std": noise_std, "co_move": co_move})
    return build_universe(scenario)
