"""CLI behavior: exit codes, file outputs, determinism, CSV formats."""

import csv
import json

import numpy as np
import pytest

import attestgame as ag
from attestgame.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def env_path(tmp_path, capsys):
    path = tmp_path / "env.json"
    code, out, _ = run(capsys, "generate", "--devices", "10", "--classes", "2",
                       "--seed", "7", "--out", str(path))
    assert code == 0
    return path


def test_generate_writes_valid_environment(env_path, capsys):
    env = ag.load_environment(env_path)
    assert ag.validate_environment(env) == ()
    assert len(env.devices) == 10


def test_generate_prints_drawn_seed_when_absent(tmp_path, capsys):
    out_file = tmp_path / "e.json"
    code, out, _ = run(capsys, "generate", "--devices", "4", "--classes", "2",
                       "--out", str(out_file))
    assert code == 0
    assert "seed=" in out
    seed = int(out.split("seed=")[1].split()[0])
    meta = json.loads(out_file.read_text())["meta"]
    assert meta["seed"] == seed


def test_generate_flags_beat_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"device_count": 6, "class_count": 3, "seed": 5}))
    out_file = tmp_path / "e.json"
    code, out, err = run(capsys, "generate", "--config", str(cfg),
                         "--devices", "8", "--out", str(out_file))
    assert code == 0
    assert "flag overrides config file" in err
    env = ag.load_environment(out_file)
    assert len(env.devices) == 8
    assert len(env.classes) == 3


def test_solve_writes_strategy_and_summary(env_path, tmp_path, capsys):
    strat_path = tmp_path / "strategy.json"
    code, out, err = run(capsys, "solve", str(env_path), "--out", str(strat_path))
    assert code == 0
    assert "defender_utility=" in out and "modes[" in out
    env = ag.load_environment(env_path)
    strat = ag.load_defender_strategy(strat_path, env)
    sol = ag.optimal_strategy(env)
    assert strat == sol.strategy


def test_solve_oracle_check_margin(env_path, capsys, tmp_path):
    small = tmp_path / "small.json"
    run(capsys, "generate", "--devices", "5", "--classes", "2", "--seed", "3",
        "--out", str(small))
    code, out, _ = run(capsys, "solve", str(small), "--oracle-check",
                       "--oracle-samples", "20000", "--seed", "11",
                       "--out", str(tmp_path / "s.json"))
    assert code == 0
    margin_line = [l for l in out.splitlines() if "oracle-check margin=" in l][0]
    margin = float(margin_line.split("margin=")[1].split()[0])
    assert margin >= -1e-6


def test_solve_rejects_multi_method_env(tmp_path, capsys, env_path):
    doc = json.loads(env_path.read_text())
    doc["methods"].append({"id": "m1", "detection_rate": 0.5, "run_cost": 1.0})
    bad = tmp_path / "multi.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 3
    assert "unsupported" in err and "single" in err


def test_validation_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"devices": [], "classes": [], "methods": [], "zero_sum": False}))
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2
    assert "error:" in err


def test_usage_errors_exit_1(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve"])  # missing positional
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--seed", "-5", "--out", str(tmp_path / "e.json")])
    assert exc.value.code == 1
    code, _, err = run(capsys, "solve", str(tmp_path / "missing.json"))
    assert code == 1


def test_best_response_round_trip(env_path, tmp_path, capsys):
    strat_path = tmp_path / "strategy.json"
    run(capsys, "solve", str(env_path), "--out", str(strat_path))
    attack_path = tmp_path / "attack.json"
    code, out, _ = run(capsys, "best-response", str(env_path),
                       "--strategy", str(strat_path), "--out", str(attack_path))
    assert code == 0
    assert "attacker_utility=" in out
    env = ag.load_environment(env_path)
    attack = ag.load_attacker_strategy(attack_path, env)
    strat = ag.load_defender_strategy(strat_path, env)
    assert attack == ag.best_response(strat, env).canonical_attack


def test_compare_csv_shape_and_recomputability(env_path, tmp_path, capsys):
    out_path = tmp_path / "rows.csv"
    code, _, _ = run(capsys, "compare", str(env_path), "--out", str(out_path))
    assert code == 0
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["strategy"] for r in rows[:4]] == ["p0", "p1", "uniform", "optimal"]
    assert {r["response"] for r in rows} == {"best", "attack_all", "no_attack"}
    labels = {(r["strategy"], r["response"]) for r in rows}
    assert ("pND", "attack_all") in labels and ("pD", "no_attack") in labels

    env = ag.load_environment(env_path)
    by_key = {(r["strategy"], r["response"]): r for r in rows}
    p0 = ag.baseline_never(env)
    expected = ag.defender_utility(p0, ag.all_ones_attack(env), env)
    assert float(by_key[("p0", "attack_all")]["defender_utility"]) == pytest.approx(
        expected, abs=1e-6
    )
    assert float(by_key[("p0", "no_attack")]["defender_utility"]) == 0.0
    assert float(by_key[("p0", "no_attack")]["attacker_utility"]) == 0.0
    # a fully deterring strategy leaves the attacker at or below zero
    assert float(by_key[("pD", "attack_all")]["attacker_utility"]) <= 1e-6
    # on this instance both full and optimal attestation deter the attacker
    assert float(by_key[("optimal", "best")]["attacker_utility"]) == 0.0
    assert float(by_key[("p1", "best")]["attacker_utility"]) == 0.0
    # defender prefers the optimum over every baseline under best response
    u_opt = float(by_key[("optimal", "best")]["defender_utility"])
    for label in ("p0", "p1", "uniform"):
        assert u_opt >= float(by_key[(label, "best")]["defender_utility"]) - 1e-6


def test_compare_replicates_aggregates(env_path, tmp_path, capsys):
    out_path = tmp_path / "agg.csv"
    code, _, _ = run(capsys, "compare", str(env_path), "--replicates", "3",
                     "--seed", "13", "--out", str(out_path))
    assert code == 0
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 12
    code2, _, _ = run(capsys, "compare", str(env_path), "--replicates", "3",
                      "--seed", "13", "--out", str(tmp_path / "agg2.csv"))
    assert (tmp_path / "agg2.csv").read_bytes() == out_path.read_bytes()


def test_sweep_coverage_with_calibration_file(env_path, tmp_path, capsys):
    cal = tmp_path / "cal.csv"
    cal.write_text(
        "coverage,detection_rate,runtime_ms\n0.0,0.05,1.0\n0.5,0.5,5.0\n1.0,0.92,9.5\n"
    )
    out_path = tmp_path / "sweep.csv"
    code, _, err = run(capsys, "sweep-coverage", str(env_path),
                       "--coverages", "0.0,0.5,1.0", "--calibration", str(cal),
                       "--out", str(out_path))
    assert code == 0
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert all(np.isfinite(float(r["defender_utility"])) for r in rows)

    # identity default prints a note
    code, _, err = run(capsys, "sweep-coverage", str(env_path),
                       "--coverages", "0.0,1.0")
    assert code == 0
    assert "identity calibration" in err


def test_sweep_exposes_interior_coverage_optimum(tmp_path, capsys):
    # steep runtime growth plus a saturating detection fit: mid coverage wins
    env = ag.Environment(
        devices=(ag.Device("d0", "c0", 30.0, -30.0, 30.0, -30.0, 2.0),),
        classes=(ag.DeviceClass("c0", 15.0, ("d0",)),),
        methods=(ag.AttestationMethod("m0", 0.8, 4.0),),
        zero_sum=True,
    )
    env_path2 = tmp_path / "one.json"
    ag.save_environment(env, env_path2)
    cal = tmp_path / "cal.csv"
    # detection saturates at coverage 0.5; runtime keeps climbing
    cal.write_text(
        "coverage,detection_rate,runtime_ms\n0.0,0.6,5.0\n0.5,1.0,5.5\n1.0,1.4,6.0\n"
    )
    out_path = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep-coverage", str(env_path2),
                     "--coverages", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                     "--calibration", str(cal), "--out", str(out_path))
    assert code == 0
    with open(out_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    utilities = [float(r["defender_utility"]) for r in rows]
    best = int(np.argmax(utilities))
    assert 0 < best < len(rows) - 1  # the trade-off peaks strictly inside the grid


def test_simulate_checksum_output(capsys):
    code, out, _ = run(capsys, "simulate-checksum", "--blocks", "10", "--modified", "1",
                       "--covered", "4", "--trials", "2000", "--seed", "5")
    assert code == 0
    assert "exact=0.400000" in out
    code2, out2, _ = run(capsys, "simulate-checksum", "--blocks", "10", "--modified", "1",
                         "--covered", "4", "--trials", "2000", "--seed", "5")
    assert out2 == out


def test_outputs_are_deterministic(tmp_path, capsys):
    a1, a2 = tmp_path / "a1.json", tmp_path / "a2.json"
    for p in (a1, a2):
        run(capsys, "generate", "--devices", "8", "--classes", "2", "--seed", "21",
            "--out", str(p))
    assert a1.read_bytes() == a2.read_bytes()
    s1, s2 = tmp_path / "s1.json", tmp_path / "s2.json"
    for p in (s1, s2):
        run(capsys, "solve", str(a1), "--out", str(p))
    assert s1.read_bytes() == s2.read_bytes()
    c1, c2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
    for p in (c1, c2):
        run(capsys, "compare", str(a1), "--out", str(p))
    assert c1.read_bytes() == c2.read_bytes()
