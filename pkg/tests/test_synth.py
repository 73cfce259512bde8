from datetime import date

import numpy as np
import pytest

from leadlag.errors import (
    InsufficientData,
    InvalidParameter,
    SchemaError,
    UnknownMarket,
)
from leadlag.granger import screen_pairs
from leadlag.series import (
    align_signals,
    as_changes,
    comovement_sign,
    difference,
    log_odds,
)
from leadlag.stationarity import make_stationary
from leadlag.synth import (
    PlantedLink,
    build_universe,
    generate_market,
    load_scenario,
    plant_leadlag,
    planted_universe,
)


class TestGenerateMarket:
    def test_deterministic(self):
        a = generate_market(7, days=50, vol=0.3)
        b = generate_market(7, days=50, vol=0.3)
        assert a.market_id == b.market_id
        assert np.array_equal(a.prices, b.prices)
        assert a.dates == b.dates

    def test_seed_changes_path(self):
        a = generate_market(1, days=50)
        b = generate_market(2, days=50)
        assert not np.array_equal(a.prices, b.prices)

    def test_prices_strictly_interior_at_high_vol(self):
        for seed in range(20):
            series = generate_market(seed, days=300, vol=3.0)
            assert series.prices.min() > 0.0
            assert series.prices.max() < 100.0

    def test_zero_vol_is_constant(self):
        series = generate_market(0, days=30, vol=0.0, base_prob=50.0)
        assert np.allclose(series.prices, 50.0)

    def test_base_prob_is_first_price(self):
        series = generate_market(3, days=10, base_prob=20.0)
        assert series.prices[0] == pytest.approx(20.0, abs=1e-9)

    def test_calendar(self):
        series = generate_market(0, days=5, start_date=date(2025, 3, 1))
        assert series.dates[0] == date(2025, 3, 1)
        assert series.dates[-1] == date(2025, 3, 5)

    def test_validation(self):
        with pytest.raises(InvalidParameter):
            generate_market(0, days=1)
        with pytest.raises(InvalidParameter):
            generate_market(0, days=10, base_prob=0.0)
        with pytest.raises(InvalidParameter):
            generate_market(0, days=10, vol=-0.1)


class TestPlantLeadlag:
    def _leader(self, seed=0, days=200, vol=0.25):
        return generate_market(seed, days=days, vol=vol, market_id="L")

    def test_construction_recovers_planted_innovations(self):
        # With near-zero noise and no contemporaneous share the follower
        # innovations are exactly sign * beta * lagged leader innovations.
        leader = self._leader()
        link = PlantedLink("L", "F", lag=2, beta=0.6, sign=-1,
                           noise_std=1e-12, co_move=0.0)
        follower = plant_leadlag(leader, link, seed=1)
        e = np.diff(log_odds(leader).values)
        g = np.diff(log_odds(follower).values)
        assert np.allclose(g[2:], -0.6 * e[:-2], atol=1e-6)
        assert np.allclose(g[:2], 0.0, atol=1e-6)

    def test_shares_leader_calendar(self):
        leader = self._leader()
        follower = plant_leadlag(
            leader, PlantedLink("L", "F", 1, 0.8, 1, 0.1), seed=2)
        assert follower.dates == leader.dates
        assert follower.market_id == "F"

    def test_deterministic_in_seed(self):
        leader = self._leader()
        link = PlantedLink("L", "F", 1, 0.8, 1, 0.1)
        a = plant_leadlag(leader, link, seed=5)
        b = plant_leadlag(leader, link, seed=5)
        c = plant_leadlag(leader, link, seed=6)
        assert np.array_equal(a.prices, b.prices)
        assert not np.array_equal(a.prices, c.prices)

    def _planted_pair(self, seed, sign, days=120):
        leader = self._leader(seed=seed, days=days)
        link = PlantedLink("L", "F", lag=1, beta=0.8, sign=sign,
                           noise_std=0.1, co_move=0.5)
        return leader, plant_leadlag(leader, link, seed=1000 + seed)

    def test_comovement_sign_recoverable(self):
        # The contemporaneous share makes the innovation correlation sign
        # match the planted sign; at matched differencing depth it should
        # be recovered every time.
        for seed in range(20):
            sign = 1 if seed % 2 == 0 else -1
            leader, follower = self._planted_pair(seed, sign)
            ls, fs = align_signals(difference(log_odds(leader), 1),
                                   difference(log_odds(follower), 1))
            assert comovement_sign(ls, fs) == sign

    def test_comovement_sign_through_unit_root_pipeline(self):
        # Per-series differencing depths occasionally disagree (the test
        # has 5% size); the depth-one convention keeps the sign stable.
        for seed in range(20):
            sign = 1 if seed % 2 == 0 else -1
            leader, follower = self._planted_pair(seed, sign)
            ls, fs = align_signals(make_stationary(log_odds(leader)),
                                   make_stationary(log_odds(follower)))
            assert comovement_sign(*as_changes(ls, fs)) == sign

    def test_screen_detects_planted_direction(self):
        leader = self._leader(seed=11, days=150)
        follower = plant_leadlag(
            leader, PlantedLink("L", "F", 2, 0.8, 1, 0.1), seed=12)
        ls = make_stationary(log_odds(leader))
        fs = make_stationary(log_odds(follower))
        ranked = screen_pairs([ls, fs], lags=(1, 2, 3), k=1)
        assert ranked[0].pair == ("L", "F")
        assert ranked[0].p_value < 1e-6

    def test_wrong_leader_id(self):
        with pytest.raises(UnknownMarket):
            plant_leadlag(self._leader(),
                          PlantedLink("other", "F", 1, 0.8, 1, 0.1), seed=0)

    def test_too_short(self):
        leader = generate_market(0, days=4, market_id="L")
        with pytest.raises(InsufficientData):
            plant_leadlag(leader, PlantedLink("L", "F", 2, 0.8, 1, 0.1), seed=0)

    def test_link_validation(self):
        with pytest.raises(InvalidParameter):
            PlantedLink("A", "A", 1, 0.8, 1, 0.1)
        with pytest.raises(InvalidParameter):
            PlantedLink("A", "B", 0, 0.8, 1, 0.1)
        with pytest.raises(InvalidParameter):
            PlantedLink("A", "B", 1, 0.8, 0, 0.1)
        with pytest.raises(InvalidParameter):
            PlantedLink("A", "B", 1, 0.8, 1, 0.0)
        with pytest.raises(InvalidParameter):
            PlantedLink("A", "B", 1, 0.8, 1, 0.1, co_move=-0.2)


SCENARIO = {
    "seed": 42, "days": 60,
    "markets": [{"market_id": "A", "vol": 0.25},
                {"market_id": "B"},
                {"market_id": "C", "base_prob": 30.0, "event_group": "cpi",
                 "title": "CPI above 3%?"}],
    "links": [{"leader_id": "A", "follower_id": "B", "lag": 1,
               "beta": 0.8, "sign": -1, "noise_std": 0.1}],
}


class TestBuildUniverse:
    def test_basic_shape(self):
        prices, metadata, links = build_universe(SCENARIO)
        assert set(prices) == {"A", "B", "C"}
        assert set(metadata) == {"A", "B", "C"}
        assert len(links) == 1 and links[0].sign == -1
        assert links[0].co_move == 0.5  # default contemporaneous share
        assert all(len(s) == 60 for s in prices.values())

    def test_metadata_fields(self):
        _, metadata, _ = build_universe(SCENARIO)
        assert metadata["C"].title == "CPI above 3%?"
        assert metadata["C"].event_group == "cpi"
        assert metadata["A"].event_group == "A"  # defaults to its own id

    def test_deterministic(self):
        p1, _, _ = build_universe(SCENARIO)
        p2, _, _ = build_universe(SCENARIO)
        for mid in p1:
            assert np.array_equal(p1[mid].prices, p2[mid].prices)

    def test_follower_differs_from_independent(self):
        no_links = dict(SCENARIO, links=[])
        with_link = build_universe(SCENARIO)[0]
        without = build_universe(no_links)[0]
        assert np.array_equal(with_link["A"].prices, without["A"].prices)
        assert not np.array_equal(with_link["B"].prices, without["B"].prices)

    def test_missing_required_field(self):
        with pytest.raises(SchemaError):
            build_universe({"seed": 1, "markets": [{"market_id": "A"}]})

    def test_empty_markets(self):
        with pytest.raises(SchemaError):
            build_universe({"seed": 1, "days": 10, "markets": []})

    def test_duplicate_market(self):
        with pytest.raises(SchemaError):
            build_universe({"seed": 1, "days": 10,
                            "markets": [{"market_id": "A"},
                                        {"market_id": "A"}]})

    def test_link_missing_field(self):
        bad = dict(SCENARIO, links=[{"leader_id": "A", "follower_id": "B"}])
        with pytest.raises(SchemaError):
            build_universe(bad)

    def test_link_unknown_follower(self):
        bad = dict(SCENARIO, links=[dict(SCENARIO["links"][0],
                                         follower_id="nope")])
        with pytest.raises(UnknownMarket):
            build_universe(bad)

    def test_two_links_one_follower(self):
        links = [SCENARIO["links"][0],
                 dict(SCENARIO["links"][0], leader_id="C")]
        with pytest.raises(SchemaError):
            build_universe(dict(SCENARIO, links=links))

    def test_load_scenario_roundtrip(self, tmp_path):
        import json
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(SCENARIO))
        assert load_scenario(path) == SCENARIO

    def test_load_scenario_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_scenario(path)
        path.write_text('["a", "list"]')
        with pytest.raises(SchemaError):
            load_scenario(path)


class TestPlantedUniverse:
    def test_shape_and_pairing(self):
        prices, metadata, links = planted_universe(0, n_markets=10,
                                                   n_links=3, days=60)
        assert len(prices) == 10 and len(metadata) == 10
        assert [(ln.leader_id, ln.follower_id) for ln in links] == \
            [("M0", "M1"), ("M2", "M3"), ("M4", "M5")]
        assert [ln.sign for ln in links] == [1, -1, 1]
        assert [ln.lag for ln in links] == [1, 2, 1]

    def test_ids_zero_padded_for_big_universes(self):
        prices, _, _ = planted_universe(0, n_markets=12, n_links=2, days=40)
        assert "M00" in prices and "M11" in prices

    def test_extra_vol_applies_to_unlinked_only(self):
        _, _, links = planted_universe(1, 8, 2, 60, extra_vol=1.0)
        linked = {m for ln in links for m in (ln.leader_id, ln.follower_id)}
        assert linked == {"M0", "M1", "M2", "M3"}

    def test_too_many_links(self):
        with pytest.raises(InvalidParameter):
            planted_universe(0, n_markets=4, n_links=3, days=40)

    def test_deterministic(self):
        a = planted_universe(5, 6, 2, 50)[0]
        b = planted_universe(5, 6, 2, 50)[0]
        for mid in a:
            assert np.array_equal(a[mid].prices, b[mid].prices)
