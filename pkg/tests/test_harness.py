import json
import math

import numpy as np
import pytest

from pricegame.errors import ConfigError
from pricegame.harness import (
    ScenarioConfig,
    SellerConfig,
    load_run,
    make_supply_schedule,
    replay_protocol,
    run_scenario,
    save_run,
)
from pricegame.market import IsoElasticModel
from pricegame.scenarios import (
    ogd_vs_omd_scenario,
    optimistic_pair_scenario,
    random_walk_scenario,
    static_ogd_scenario,
)


def base_doc():
    return {
        "model": {"kind": "ces", "budget": 2.0, "weights": [1, 1], "sigma": 2.5},
        "horizon": 10,
        "supply": {"kind": "static", "base": [1.0, 1.0]},
        "sellers": [
            {"algorithm": "ogd", "feedback": "adjusted"},
            {"algorithm": "ogd", "feedback": "adjusted"},
        ],
    }


def test_config_roundtrip_and_defaults():
    cfg = ScenarioConfig.from_dict(base_doc())
    assert cfg.seed == 0
    assert cfg.sellers[0].schedule == "inverse-sqrt"
    cfg2 = ScenarioConfig.from_dict(cfg.to_dict())
    assert cfg2 == cfg


def test_config_rejects_unknown_keys():
    for mutate in (
        lambda d: d.update(extra=1),
        lambda d: d["model"].update(bogus=2),
        lambda d: d["supply"].update(slope=3),
        lambda d: d["sellers"][0].update(color="red"),
    ):
        doc = base_doc()
        mutate(doc)
        with pytest.raises(ConfigError, match="unknown key"):
            ScenarioConfig.from_dict(doc)


def test_config_validation_rules():
    doc = base_doc()
    doc["sellers"][0]["feedback"] = "exact"  # needs iso-elastic demand
    with pytest.raises(ConfigError, match="exact feedback"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    doc["sellers"][0]["feedback"] = "smoothed"
    with pytest.raises(ConfigError, match="smoothed feedback"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    doc["smoothing"] = {"epsilon": 1.0, "r_lower": 1.0, "R_upper": 1.0}
    with pytest.raises(ConfigError, match="epsilon \\* R_upper"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    doc["sellers"][0]["algorithm"] = "omd"  # optimistic learners need a horizon step
    doc["sellers"][0]["schedule"] = "inverse-sqrt"
    with pytest.raises(ConfigError, match="fixed-horizon"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    doc["model"]["rho"] = 0.6  # both sigma and rho given
    with pytest.raises(ConfigError, match="exactly one"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    doc["sellers"][0]["initial_price"] = 1000.0
    with pytest.raises(ConfigError, match="initial_price"):
        ScenarioConfig.from_dict(doc)

    doc = base_doc()
    del doc["sellers"][1]
    with pytest.raises(ConfigError, match="2 goods"):
        ScenarioConfig.from_dict(doc)


def test_rho_sigma_equivalence():
    doc = base_doc()
    del doc["model"]["sigma"]
    doc["model"]["rho"] = 0.6  # sigma = 1/(1 - rho) = 2.5
    cfg = ScenarioConfig.from_dict(doc)
    assert cfg.model.sigma == pytest.approx(2.5, rel=1e-15)


def test_zero_horizon_gives_empty_trace():
    cfg = static_ogd_scenario(0)
    tr = run_scenario(cfg)
    assert tr.horizon == 0 and tr.prices.shape == (0, 2)
    assert tr.self_check() == 0.0


def test_replay_determinism():
    cfg = random_walk_scenario(0.01, 500, seed=42)
    t1 = run_scenario(cfg)
    t2 = run_scenario(cfg)
    for name in ("prices", "demands", "revenues", "gradients", "supplies"):
        assert np.array_equal(getattr(t1, name), getattr(t2, name))


def test_seed_changes_random_walk_but_not_static():
    a = run_scenario(random_walk_scenario(0.01, 100, seed=1))
    b = run_scenario(random_walk_scenario(0.01, 100, seed=2))
    assert not np.array_equal(a.supplies, b.supplies)
    c = run_scenario(static_ogd_scenario(100, seed=1))
    d = run_scenario(static_ogd_scenario(100, seed=2))
    assert np.array_equal(c.prices, d.prices)


def test_initial_price_jitter_seeded():
    cfg = ScenarioConfig.from_dict({**base_doc(), "initial_price_jitter": 0.2, "seed": 7})
    p1 = cfg.initial_log_prices()
    p2 = cfg.initial_log_prices()
    assert np.array_equal(p1, p2)
    cfg2 = ScenarioConfig.from_dict({**base_doc(), "initial_price_jitter": 0.2, "seed": 8})
    assert not np.array_equal(p1, cfg2.initial_log_prices())
    assert np.all(np.abs(p1) <= 0.2)  # around the log-domain midpoint 0


def test_exact_feedback_ascends_to_kink():
    # seller 1 is pinned at the floor (its demand never reaches its huge
    # supply, so its gradient stays 1 - E and projection holds it at p_min),
    # leaving seller 0 a static opponent; seller 0 starts far below its kink
    # at p1 * (c0/w0)^(1/E) ~ 39.8, sees gradient +1 and climbs until demand
    # falls to supply
    cfg = ScenarioConfig(
        model=IsoElasticModel(scales=(1e9, 1.0), elasticity=2.5),
        sellers=(
            SellerConfig("ogd", "exact", "inverse-sqrt", initial_price=0.05),
            SellerConfig("ogd", "exact", "inverse-sqrt", initial_price=0.01),
        ),
        horizon=60,
        supply_kind="static",
        supply_base=(1.0, 1e12),
        supply_params={},
    )
    tr = run_scenario(cfg)
    assert np.all(tr.prices[:, 1] == math.exp(math.log(0.01)))
    g = tr.gradients[:, 0]
    k = int(np.argmax(g != 1.0))
    assert k > 8
    assert np.all(np.diff(np.log(tr.prices[: k + 1, 0])) > 0)
    kink = 0.01 * (1e9 / 1.0) ** (1 / 2.5)
    assert abs(math.log(tr.prices[k, 0]) - math.log(kink)) < 1.0


def test_supply_capping_invariant():
    tr = run_scenario(random_walk_scenario(0.02, 300, seed=3))
    assert np.all(tr.revenues <= tr.prices * tr.supplies + 1e-12)


def test_supply_schedule_kinds():
    s = make_supply_schedule("static", [1.0, 2.0], T=50)
    assert s.variation() == 0.0
    assert np.all(s.w == [1.0, 2.0])

    d = make_supply_schedule("drift", [1.0, 1.0], T=100, log_change=math.log(2.0))
    assert d.variation() == pytest.approx(2 * math.log(2.0), rel=1e-12)
    np.testing.assert_allclose(d.w[-1], [2.0, 2.0], rtol=1e-12)
    np.testing.assert_allclose(d.w[0], [1.0, 1.0], rtol=1e-12)

    r = make_supply_schedule("random-walk", [1.0, 1.0], T=100, seed=0, step_cap=0.05)
    steps = np.abs(np.diff(np.log(r.w), axis=0))
    assert np.max(steps) <= 0.05
    assert r.variation() <= 2 * 0.05 * 100

    with pytest.raises(ConfigError):
        make_supply_schedule("random-walk", [1.0], T=10, step_cap=-0.1)
    with pytest.raises(ConfigError):
        make_supply_schedule("sawtooth", [1.0], T=10)
    with pytest.raises(ConfigError):
        make_supply_schedule("static", [0.0], T=10)


def test_drift_window():
    d = make_supply_schedule("drift", [1.0], T=10, log_change=1.0, start=3, end=5)
    lw = np.log(d.w[:, 0])
    assert np.all(lw[:3] == 0.0)
    np.testing.assert_allclose(lw[4:], 1.0, rtol=1e-12)
    with pytest.raises(ConfigError):
        make_supply_schedule("drift", [1.0], T=10, log_change=1.0, start=8, end=2)


class SpyLearner:
    """Records everything the harness hands to a learner."""

    def __init__(self, price=0.0):
        self.price = price
        self.play_calls = 0
        self.received = []

    def play(self):
        self.play_calls += 1
        return self.price

    def feed(self, g):
        self.received.append(g)


def test_information_hiding_via_spy():
    cfg = ogd_vs_omd_scenario(25)
    spies = [SpyLearner(0.0), SpyLearner(0.1)]
    replay_protocol(cfg, spies)
    for spy in spies:
        assert spy.play_calls == 25
        assert len(spy.received) == 25
        # the only thing a learner ever sees is its own scalar gradient
        assert all(isinstance(g, float) for g in spy.received)


def test_replay_protocol_matches_kernel():
    for cfg in (static_ogd_scenario(120, seed=2), optimistic_pair_scenario("omd", 120)):
        tr = run_scenario(cfg)
        out, _ = replay_protocol(cfg)
        for key in ("prices", "demands", "revenues", "gradients"):
            np.testing.assert_allclose(out[key], getattr(tr, key), rtol=1e-10, atol=1e-13)


def test_save_and_load_run(tmp_path):
    cfg = ogd_vs_omd_scenario(40)
    tr = run_scenario(cfg)
    manifest = save_run(tr, tmp_path / "run")
    assert (tmp_path / "run" / "trace.csv").exists()
    assert manifest["supply_variation"] == 0.0
    back = load_run(tmp_path / "run")
    assert np.array_equal(back.prices, tr.prices)
    assert back.scenario == cfg
    # loading by trace path works too
    back2 = load_run(tmp_path / "run" / "trace.csv")
    assert np.array_equal(back2.revenues, tr.revenues)
    with pytest.raises(ConfigError):
        load_run(tmp_path)  # no manifest here


def test_manifest_bytes_reproducible(tmp_path):
    cfg = random_walk_scenario(0.01, 30, seed=9)
    save_run(run_scenario(cfg), tmp_path / "a")
    save_run(run_scenario(cfg), tmp_path / "b")
    for name in ("trace.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
