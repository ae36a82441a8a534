"""Random instance generation and document round-trips."""

import json

import numpy as np
import pytest

import attestgame as ag


def test_defaults_generate_valid_environment():
    env = ag.generate(ag.ScenarioConfig(seed=1))
    assert ag.validate_environment(env) == ()
    assert len(env.devices) == 50
    assert len(env.classes) == 5
    assert all(len(c.member_device_ids) == 10 for c in env.classes)
    assert len(env.methods) == 1


def test_generation_respects_ranges_and_coupling():
    cfg = ag.ScenarioConfig(seed=2)
    env = ag.generate(cfg)
    m = env.methods[0]
    assert cfg.detection_rate_range[0] <= m.detection_rate <= cfg.detection_rate_range[1]
    assert cfg.attest_cost_range[0] <= m.run_cost <= cfg.attest_cost_range[1]
    for c in env.classes:
        assert cfg.exploit_cost_range[0] <= c.exploit_cost <= cfg.exploit_cost_range[1]
    for d in env.devices:
        assert cfg.gain_range[0] <= d.defender_gain <= cfg.gain_range[1]
        assert cfg.gain_range[0] <= d.attacker_gain <= cfg.gain_range[1]
        assert cfg.device_attack_cost_range[0] <= d.attack_cost <= cfg.device_attack_cost_range[1]
        assert d.attacker_loss == -d.defender_gain
        assert d.defender_loss == -d.attacker_gain


def test_generation_deterministic_and_seed_sensitive():
    cfg = ag.ScenarioConfig(seed=99)
    assert ag.generate(cfg) == ag.generate(cfg)
    rng = np.random.default_rng(0)
    for _ in range(100):
        s1, s2 = (int(x) for x in rng.integers(0, 2**63, size=2))
        if s1 == s2:
            continue
        e1 = ag.generate(ag.ScenarioConfig(device_count=4, class_count=2, seed=s1))
        e2 = ag.generate(ag.ScenarioConfig(device_count=4, class_count=2, seed=s2))
        assert e1 != e2


def test_remainder_devices_distributed_round_robin():
    env = ag.generate(ag.ScenarioConfig(device_count=7, class_count=3, seed=5))
    sizes = sorted(len(c.member_device_ids) for c in env.classes)
    assert sizes == [2, 2, 3]
    assert ag.validate_environment(env) == ()


def test_config_validation():
    with pytest.raises(ag.ConfigError):
        ag.ScenarioConfig(gain_range=(40.0, 20.0), seed=1)
    with pytest.raises(ag.ConfigError):
        ag.ScenarioConfig(device_count=3, class_count=5, seed=1)
    with pytest.raises(ag.ConfigError):
        ag.ScenarioConfig(detection_rate_range=(0.5, 1.5), seed=1)
    with pytest.raises(ag.ConfigError):
        ag.ScenarioConfig(seed=-3)
    with pytest.raises(ag.ConfigError):
        ag.generate(ag.ScenarioConfig(seed=None))
    cfg = ag.ScenarioConfig(seed=7)
    assert ag.ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_environment_round_trip(tmp_path):
    cfg = ag.ScenarioConfig(device_count=12, class_count=3, seed=31)
    env = ag.generate(cfg)
    path = tmp_path / "env.json"
    ag.save_environment(env, path, seed=31, config=cfg)
    loaded = ag.load_environment(path)
    assert loaded == env

    meta = json.loads(path.read_text())["meta"]
    assert meta["seed"] == 31
    assert meta["config"]["device_count"] == 12

    # property-style: round-trip is lossless across random instances
    rng = np.random.default_rng(6)
    for _ in range(10):
        e = ag.generate(ag.ScenarioConfig(device_count=5, class_count=2,
                                          seed=int(rng.integers(0, 2**63))))
        p = tmp_path / "r.json"
        ag.save_environment(e, p)
        assert ag.load_environment(p) == e


def test_load_rejects_device_in_two_classes(tmp_path):
    cfg = ag.ScenarioConfig(device_count=4, class_count=2, seed=8)
    env = ag.generate(cfg)
    path = tmp_path / "env.json"
    ag.save_environment(env, path)
    doc = json.loads(path.read_text())
    doc["classes"][1]["member_device_ids"].append(doc["classes"][0]["member_device_ids"][0])
    path.write_text(json.dumps(doc))
    with pytest.raises(ag.ValidationError) as err:
        ag.load_environment(path)
    assert "partition" in str(err.value)


def test_load_rejects_negative_gain_naming_device(tmp_path):
    env = ag.generate(ag.ScenarioConfig(device_count=2, class_count=1, seed=8))
    path = tmp_path / "env.json"
    ag.save_environment(env, path)
    doc = json.loads(path.read_text())
    doc["devices"][1]["attacker_gain"] = -4.0
    doc["devices"][1]["attacker_loss"] = -5.0  # keep loss < gain out of the picture
    path.write_text(json.dumps(doc))
    with pytest.raises(ag.ValidationError) as err:
        ag.load_environment(path)
    assert doc["devices"][1]["id"] in str(err.value)


def test_load_names_missing_field_and_location(tmp_path):
    env = ag.generate(ag.ScenarioConfig(device_count=2, class_count=1, seed=8))
    path = tmp_path / "env.json"
    ag.save_environment(env, path)
    doc = json.loads(path.read_text())
    del doc["devices"][1]["attack_cost"]
    path.write_text(json.dumps(doc))
    with pytest.raises(ag.ValidationError) as err:
        ag.load_environment(path)
    assert "$.devices[1].attack_cost" in str(err.value)

    path.write_text("{not json")
    with pytest.raises(ag.ValidationError):
        ag.load_environment(path)


def test_strategy_documents_round_trip(tmp_path):
    env = ag.generate(ag.ScenarioConfig(device_count=6, class_count=2, seed=12))
    rng = np.random.default_rng(4)
    strat = ag.DefenderStrategy(rng.uniform(0, 1, size=(6, 1)))
    spath = tmp_path / "strategy.json"
    ag.save_defender_strategy(strat, env, spath)
    assert ag.load_defender_strategy(spath, env) == strat

    attack = ag.AttackerStrategy(rng.integers(0, 2, size=6).astype(np.int8))
    apath = tmp_path / "attack.json"
    ag.save_attacker_strategy(attack, env, apath)
    assert ag.load_attacker_strategy(apath, env) == attack


def test_strategy_documents_reject_mismatches(tmp_path):
    env = ag.generate(ag.ScenarioConfig(device_count=3, class_count=1, seed=13))
    strat = ag.DefenderStrategy(np.full((3, 1), 0.5))
    spath = tmp_path / "strategy.json"
    ag.save_defender_strategy(strat, env, spath)

    doc = json.loads(spath.read_text())
    doc["d9"] = {"m0": 0.5}
    spath.write_text(json.dumps(doc))
    with pytest.raises(ag.ValidationError):
        ag.load_defender_strategy(spath, env)

    doc = {d: {"m0": 0.5} for d in ("d0", "d1")}  # missing d2
    spath.write_text(json.dumps(doc))
    with pytest.raises(ag.ValidationError) as err:
        ag.load_defender_strategy(spath, env)
    assert "d2" in str(err.value)

    apath = tmp_path / "attack.json"
    apath.write_text(json.dumps({"d0": 1, "d1": 0, "d2": 3}))
    with pytest.raises(ag.ValidationError):
        ag.load_attacker_strategy(apath, env)
