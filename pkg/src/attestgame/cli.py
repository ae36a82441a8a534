"""Command-line front end.

Subcommands: generate, solve, best-response, compare, sweep-coverage,
simulate-checksum.  Inputs and outputs are the JSON documents of the
scenario module and plot-ready CSV.  Exit codes: 0 success, 1 usage or
config error, 2 validation error, 3 unsupported case.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import secrets
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checksum as checksum_mod
from . import scenario as scenario_mod
from . import solve as solve_mod
from .errors import (
    AttestGameError,
    CalibrationError,
    ConfigError,
    EnumerationCapError,
    UndeterrableError,
    UnsupportedCaseError,
    ValidationError,
)
from .model import (
    AttackerStrategy,
    DefenderStrategy,
    Environment,
    all_ones_attack,
    all_zero_attack,
    attacker_utility,
    defender_utility,
)
from .response import best_response

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_UNSUPPORTED = 3

ORACLE_MARGIN = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(
            f"seed must be an unsigned 64-bit integer, got {value}"
        )
    return value


@dataclass(frozen=True)
class ComparisonRow:
    """One line of the strategy-profile comparison CSV."""

    strategy_label: str
    attacker_response_label: str
    defender_utility: float
    attacker_utility: float


def _draw_seed() -> int:
    return secrets.randbits(63)


def _write_csv(rows: list[ComparisonRow], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["strategy", "response", "defender_utility", "attacker_utility"])
    for row in rows:
        writer.writerow(
            [
                row.strategy_label,
                row.attacker_response_label,
                f"{row.defender_utility:.6f}",
                f"{row.attacker_utility:.6f}",
            ]
        )


def _profile_row(
    label: str,
    response_label: str,
    strategy: DefenderStrategy,
    attack: AttackerStrategy,
    env: Environment,
) -> ComparisonRow:
    return ComparisonRow(
        strategy_label=label,
        attacker_response_label=response_label,
        defender_utility=defender_utility(strategy, attack, env),
        attacker_utility=attacker_utility(strategy, attack, env),
    )


def comparison_rows(env: Environment, epsilon: float = 0.0) -> list[ComparisonRow]:
    """All comparison profiles for one environment: the four strategies under
    best response, under forced attack-everything and forced no-attack, and
    the acceptance/deterrence candidates against attack-all / no-attack."""
    solution = solve_mod.optimal_strategy(env, epsilon=epsilon)
    uniform_q, uniform = solve_mod.baseline_optimal_uniform(env)
    named = [
        ("p0", solve_mod.baseline_never(env)),
        ("p1", solve_mod.baseline_always(env)),
        ("uniform", uniform),
        ("optimal", solution.strategy),
    ]
    rows = []
    for label, strat in named:
        br = best_response(strat, env)
        rows.append(
            ComparisonRow(
                strategy_label=label,
                attacker_response_label="best",
                defender_utility=defender_utility(strat, br.canonical_attack, env),
                attacker_utility=br.attack_utility,
            )
        )
    ones = all_ones_attack(env)
    zeros = all_zero_attack(env)
    for label, strat in named:
        rows.append(_profile_row(label, "attack_all", strat, ones, env))
    for label, strat in named:
        rows.append(_profile_row(label, "no_attack", strat, zeros, env))

    # acceptance vs deterrence profiles
    n = len(env.devices)
    pnd = np.zeros((n, 1))
    pd = np.zeros((n, 1))
    deter_everywhere = True
    for cls in env.classes:
        nd_members = solve_mod.non_deter_strategy(cls, env)
        det = solve_mod.deterrence_strategy(cls, env, epsilon)
        for k, device_id in enumerate(cls.member_device_ids):
            i = env.device_index[device_id]
            pnd[i, 0] = nd_members[k]
            if det.feasible:
                pd[i, 0] = det.probabilities[k]
        deter_everywhere = deter_everywhere and det.feasible
    nd_strategy = DefenderStrategy(pnd)
    rows.append(_profile_row("pND", "attack_all", nd_strategy, ones, env))
    rows.append(_profile_row("pND", "no_attack", nd_strategy, zeros, env))
    if deter_everywhere:
        d_strategy = DefenderStrategy(pd)
        rows.append(_profile_row("pD", "attack_all", d_strategy, ones, env))
        rows.append(_profile_row("pD", "no_attack", d_strategy, zeros, env))
    else:
        print(
            "note: deterrence infeasible for at least one class; pD rows omitted",
            file=sys.stderr,
        )
    return rows


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    overrides = {}
    if args.devices is not None:
        overrides["device_count"] = args.devices
    if args.classes is not None:
        overrides["class_count"] = args.classes
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
        config_kwargs = dict(data)
        clashes = sorted(set(config_kwargs) & set(overrides))
        for key in clashes:
            if config_kwargs[key] != overrides[key]:
                print(
                    f"note: flag overrides config file for {key} "
                    f"({config_kwargs[key]!r} -> {overrides[key]!r})",
                    file=sys.stderr,
                )
        config_kwargs.update(overrides)
    else:
        config_kwargs = overrides
    seed = args.seed
    if seed is None:
        seed = config_kwargs.get("seed")
    if seed is None:
        seed = _draw_seed()
    config_kwargs["seed"] = seed
    config = scenario_mod.ScenarioConfig.from_dict(config_kwargs)
    env = scenario_mod.generate(config)
    scenario_mod.save_environment(env, args.out, seed=seed, config=config)
    print(f"seed={seed}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    env = scenario_mod.load_environment(args.env)
    solution = solve_mod.optimal_strategy(env, epsilon=args.epsilon)
    modes = ",".join(f"{c.class_id}={c.mode}" for c in solution.candidate_log)
    summary = (
        f"modes[{modes}] "
        f"defender_utility={solution.defender_utility_at_best_response:.6f} "
        f"attacker_utility={solution.attacker_best_response.attack_utility:.6f} "
        f"tie={str(solution.attacker_best_response.is_tie).lower()}"
    )
    flagged = [d for c in solution.candidate_log for d in c.above_class_threshold]
    if flagged:
        print(
            f"note: deterrence uses probabilities above the single-target "
            f"threshold for devices {flagged}",
            file=sys.stderr,
        )
    if args.out:
        scenario_mod.save_defender_strategy(solution.strategy, env, args.out)
        print(summary)
        print(f"wrote {args.out}")
    else:
        p = solution.strategy.conform(env)
        doc = {
            d.id: {m.id: float(p[i, j]) for j, m in enumerate(env.methods)}
            for i, d in enumerate(env.devices)
        }
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
        print(summary, file=sys.stderr)
    if args.oracle_check:
        seed = args.seed if args.seed is not None else _draw_seed()
        if args.seed is None:
            print(f"oracle-check seed={seed}")
        result = solve_mod.randomized_search_check(env, args.oracle_samples, seed)
        if result is None:
            print("oracle-check: no samples requested")
            return EXIT_OK
        _, sampled_utility = result
        margin = solution.defender_utility_at_best_response - sampled_utility
        print(
            f"oracle-check margin={margin:.9f} samples={args.oracle_samples} "
            f"(solver minus best sampled; negative below -{ORACLE_MARGIN:g} would "
            f"mean the sampler beat the solver)"
        )
        if margin < -ORACLE_MARGIN:
            print(
                f"error: randomized search beat the solver by {-margin:.9f}",
                file=sys.stderr,
            )
            return EXIT_VALIDATION
    return EXIT_OK


def cmd_best_response(args) -> int:
    env = scenario_mod.load_environment(args.env)
    strategy = scenario_mod.load_defender_strategy(args.strategy, env)
    result = best_response(strategy, env)
    summary = (
        f"attacker_utility={result.attack_utility:.6f} "
        f"attacked={int(result.canonical_attack.attacks.sum())} "
        f"tie={str(result.is_tie).lower()}"
    )
    if args.out:
        scenario_mod.save_attacker_strategy(result.canonical_attack, env, args.out)
        print(summary)
        print(f"wrote {args.out}")
    else:
        a = result.canonical_attack.conform(env)
        doc = {d.id: int(a[i]) for i, d in enumerate(env.devices)}
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
        print(summary, file=sys.stderr)
    return EXIT_OK


def _derived_seed(base: int, index: int) -> int:
    return int(
        np.random.SeedSequence(base, spawn_key=(index,)).generate_state(1, np.uint64)[0]
    )


def cmd_compare(args) -> int:
    if args.replicates < 1:
        raise ConfigError(f"--replicates must be >= 1, got {args.replicates}")
    if args.replicates == 1:
        env = scenario_mod.load_environment(args.env)
        rows = comparison_rows(env, epsilon=args.epsilon)
    else:
        meta = scenario_mod.environment_meta(args.env)
        if not meta.get("config"):
            raise ConfigError(
                "--replicates needs an environment document with meta.config "
                "(produced by the generate command)"
            )
        base_seed = args.seed
        if base_seed is None:
            base_seed = meta.get("seed")
        if base_seed is None:
            base_seed = _draw_seed()
            print(f"seed={base_seed}")
        replicate_rows: list[list[ComparisonRow]] = []
        for r in range(args.replicates):
            config = scenario_mod.ScenarioConfig.from_dict(
                {**meta["config"], "seed": _derived_seed(base_seed, r)}
            )
            replicate_rows.append(
                comparison_rows(scenario_mod.generate(config), epsilon=args.epsilon)
            )
        shapes = {tuple((w.strategy_label, w.attacker_response_label) for w in rows)
                  for rows in replicate_rows}
        if len(shapes) != 1:
            raise ValidationError(
                "replicates produced different row sets (deterrence feasibility "
                "differs); rerun with --replicates 1 per instance"
            )
        rows = []
        for k in range(len(replicate_rows[0])):
            rows.append(
                ComparisonRow(
                    strategy_label=replicate_rows[0][k].strategy_label,
                    attacker_response_label=replicate_rows[0][k].attacker_response_label,
                    defender_utility=float(
                        np.mean([rr[k].defender_utility for rr in replicate_rows])
                    ),
                    attacker_utility=float(
                        np.mean([rr[k].attacker_utility for rr in replicate_rows])
                    ),
                )
            )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_csv(rows, fh)
        print(f"wrote {args.out}")
    else:
        _write_csv(rows, sys.stdout)
    return EXIT_OK


def _parse_coverages(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad coverage grid {text!r}") from None
    if not values:
        raise ConfigError("empty coverage grid")
    return values


def cmd_sweep_coverage(args) -> int:
    env = scenario_mod.load_environment(args.env)
    if args.calibration:
        calibration = checksum_mod.calibrate(
            checksum_mod.load_measurements_csv(args.calibration)
        )
    else:
        calibration = checksum_mod.IDENTITY_CALIBRATION
        print(
            "note: no calibration file given; using the synthetic identity "
            "calibration (detection rate = coverage, 1 ms per unit coverage)",
            file=sys.stderr,
        )
    coverages = _parse_coverages(args.coverages)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["coverage", "detection_rate", "run_cost", "defender_utility"])
    for coverage in coverages:
        method = checksum_mod.method_from_coverage(
            coverage, calibration, cost_scale=args.cost_scale
        )
        env_c = Environment(
            devices=env.devices,
            classes=env.classes,
            methods=(method,),
            zero_sum=env.zero_sum,
        )
        solution = solve_mod.optimal_strategy(env_c, epsilon=args.epsilon)
        writer.writerow(
            [
                f"{coverage:.6f}",
                f"{method.detection_rate:.6f}",
                f"{method.run_cost:.6f}",
                f"{solution.defender_utility_at_best_response:.6f}",
            ]
        )
    if args.out:
        Path(args.out).write_text(out.getvalue())
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(out.getvalue())
    return EXIT_OK


def cmd_simulate_checksum(args) -> int:
    layout = checksum_mod.MemoryLayout(
        total_blocks=args.blocks, block_size_bytes=args.block_size
    )
    seed = args.seed if args.seed is not None else _draw_seed()
    if args.seed is None:
        print(f"seed={seed}")
    exact = checksum_mod.checksum_detection_probability(
        layout, args.modified, args.covered
    )
    empirical = checksum_mod.simulate_attestation(
        layout, args.modified, args.covered, args.trials, seed
    )
    print(
        f"blocks={args.blocks} modified={args.modified} covered={args.covered} "
        f"trials={args.trials} exact={exact:.6f} empirical={empirical:.6f}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="attestgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random environment document")
    p.add_argument("--devices", type=int, default=None)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--seed", type=_u64, default=None)
    p.add_argument("--config", default=None, help="JSON file of scenario parameters")
    p.add_argument("--out", default="environment.json")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="compute the defender-optimal strategy")
    p.add_argument("env", help="environment document")
    p.add_argument("--out", default=None, help="strategy JSON destination")
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="extra probability added to deterrence entries")
    p.add_argument("--oracle-check", action="store_true",
                   help="verify against randomized search (small environments)")
    p.add_argument("--oracle-samples", type=int, default=100_000)
    p.add_argument("--seed", type=_u64, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("best-response", help="attacker best response to a strategy")
    p.add_argument("env")
    p.add_argument("--strategy", required=True, help="defender strategy JSON")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_best_response)

    p = sub.add_parser("compare", help="strategy-profile comparison CSV")
    p.add_argument("env")
    p.add_argument("--out", default=None)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--replicates", type=int, default=1,
                   help="average over fresh instances drawn from meta.config")
    p.add_argument("--seed", type=_u64, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-coverage", help="re-solve across checksum coverages")
    p.add_argument("env")
    p.add_argument("--coverages",
                   default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--calibration", default=None,
                   help="CSV of coverage,detection_rate,runtime_ms measurements")
    p.add_argument("--cost-scale", type=float, default=1.0,
                   help="cost units per millisecond of checksum runtime")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep_coverage)

    p = sub.add_parser("simulate-checksum", help="Monte-Carlo checksum detection rate")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--block-size", type=int, default=500)
    p.add_argument("--modified", type=int, required=True)
    p.add_argument("--covered", type=int, required=True)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=_u64, default=None)
    p.set_defaults(func=cmd_simulate_checksum)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, CalibrationError, UndeterrableError, EnumerationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except UnsupportedCaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except AttestGameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
