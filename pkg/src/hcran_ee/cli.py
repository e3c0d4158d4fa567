"""Command line entry point: ``hcran-ee {solve,sweep,oracle}``.

Exit codes: 0 success, 2 configuration error, 3 infeasible instance,
4 internal error (including a failed oracle verification).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import brute_force_solve, static_fronthaul
from .channel import generate_drop
from .errors import ConfigError, InvalidArgumentError
from .harness import (Algorithm, ExperimentPlan, emit_results, fmt, parse_config, plan_from_dict,
                      point_setup, run_sweep, write_csv_rows)
from .io import drop_from_dict, drop_to_dict, dump_json, fixture_from_dict, load_fixtures, solution_to_dict
from .solver import FronthaulGroups, SolverStatus, check_feasibility, solve_ee

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4
ORACLE_BAND = (0.98, 1.001)

log = logging.getLogger("hcran_ee")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _load_plan(args) -> ExperimentPlan:
    plan = parse_config(args.config) if args.config else plan_from_dict({})
    if args.seed is not None:
        from dataclasses import replace
        plan = replace(plan, base_seed=args.seed)
    return plan


def cmd_solve(args) -> int:
    plan = _load_plan(args)
    setup = point_setup(plan, plan.sweep_values[0])
    if args.drop:
        topo, ch = drop_from_dict(json.loads(Path(args.drop).read_text()))
        if ch.shape[2] != setup.system.num_rbs:
            raise ConfigError(f"system.num_rbs: drop has {ch.shape[2]} RBs, config {setup.system.num_rbs}")
    else:
        topo, ch = generate_drop(setup.drop.with_seed(plan.base_seed), setup.system)
    if Algorithm(args.algorithm) == Algorithm.PROPOSED:
        groups = FronthaulGroups.pooled(topo, setup.pooled_cap_bps)
    else:
        groups = static_fronthaul(topo, setup.system, setup.static_cap_bps)
    sol, rep = solve_ee(ch, topo, setup.system, fronthaul=groups)
    feas = check_feasibility(sol, ch, topo, setup.system, groups)
    out = {"algorithm": args.algorithm, "report": rep.as_dict(), "feasibility": feas.as_dict(),
           "solution": solution_to_dict(sol)}
    if args.save_drop:
        dump_json(drop_to_dict(topo, ch), args.save_drop)
    if args.format == "json":
        text = json.dumps(out, indent=1, sort_keys=True) + "\n"
        Path(args.out).write_text(text) if args.out else sys.stdout.write(text)
    else:
        row = {"algorithm": args.algorithm, "status": rep.status.value,
               "ee_bits_per_joule": fmt(sol.ee_bits_per_joule),
               "dinkelbach_iterations": str(len(rep.q_trace)),
               "max_violation": fmt(feas.max_violation)}
        write_csv_rows(list(row), [row], args.out or "/dev/stdout")
    return EXIT_INFEASIBLE if rep.status == SolverStatus.INFEASIBLE else EXIT_OK


def cmd_sweep(args) -> int:
    plan = _load_plan(args)
    result = run_sweep(plan, threads=args.threads)
    emit_results(result, args.format, args.out or "/dev/stdout")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.fixtures:
        files = sorted(Path(args.fixtures).glob("*.json"))
        fixtures = [fixture_from_dict(json.loads(p.read_text())) for p in files]
    else:
        fixtures = load_fixtures()
    rows, ok = [], True
    for fx in fixtures:
        reference = fx.oracle_ee
        if args.recompute:
            reference = brute_force_solve(fx.channel, fx.topology, fx.config,
                                          grid_levels=args.grid_levels).best_ee
        sol, rep = solve_ee(fx.channel, fx.topology, fx.config)
        ratio = sol.ee_bits_per_joule / reference if reference > 0 else float("nan")
        passed = ORACLE_BAND[0] <= ratio <= ORACLE_BAND[1]
        ok &= passed
        rows.append({"fixture": fx.name, "oracle_ee": fmt(reference), "solver_ee": fmt(sol.ee_bits_per_joule),
                     "ratio": fmt(ratio), "status": rep.status.value, "pass": str(passed).lower()})
    if args.format == "json":
        text = json.dumps(rows, indent=1) + "\n"
        Path(args.out).write_text(text) if args.out else sys.stdout.write(text)
    else:
        write_csv_rows(["fixture", "oracle_ee", "solver_ee", "ratio", "status", "pass"], rows,
                       args.out or "/dev/stdout")
    return EXIT_OK if ok else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON experiment configuration")
    common.add_argument("--seed", type=_u64, help="base seed (overrides the configuration)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="hcran-ee", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve one drop")
    p.add_argument("--drop", type=Path, help="drop JSON; generated from --seed when omitted")
    p.add_argument("--save-drop", type=Path, help="write the solved drop as JSON")
    p.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="proposed")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common], help="run an experiment plan")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", parents=[common], help="check the solver against the oracle fixtures")
    p.add_argument("--fixtures", type=Path, help="directory of fixture JSON files")
    p.add_argument("--recompute", action="store_true", help="rerun the exhaustive oracle")
    p.add_argument("--grid-levels", type=int, default=64)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure maps to one exit code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
