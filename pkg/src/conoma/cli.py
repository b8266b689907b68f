"""Command-line entry point.

Exit codes: 0 success, 2 bad input or config, 3 no cell feasible,
4 an internal invariant failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .channel import load_scenario, save_scenario
from .config import ConfigError, apply_overrides, build_manifest, load_json, parse_study
from .harness import (
    CONVERGENCE_FILE,
    SCHEMES,
    compare_schemes,
    convergence_table,
    figure_tables,
    run_schemes,
    solve_scheme,
    write_tables,
)
from .optimizer import OptimizerConfig

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 2, 3, 4


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read_json(path: str) -> dict:
    try:
        return load_json(path)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from None
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror}") from None


def cmd_scenario(args) -> int:
    overrides = {"alpha": args.alpha, "base_seed": args.seed}
    data = apply_overrides(_read_json(args.config) if args.config else {}, overrides)
    data.setdefault("sweep", {"axis": "alpha", "values": [data.get("alpha", 0.95)]})
    spec = parse_study(data)
    scenario = spec.template.draw(spec.alpha, spec.base_seed)
    save_scenario(scenario, args.out)
    print(f"wrote {args.out}: {scenario.n_cells} cells, alpha={spec.alpha}, seed={spec.base_seed}")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except json.JSONDecodeError as err:
        return _fail(EXIT_CONFIG, f"{args.scenario}:{err.lineno}:{err.colno}: {err.msg}")
    except (ValueError, TypeError) as err:
        return _fail(EXIT_CONFIG, f"{args.scenario}: {err}")
    except OSError as err:
        return _fail(EXIT_CONFIG, f"{args.scenario}: {err.strerror}")
    try:
        optimizer = OptimizerConfig(epsilon=args.epsilon, max_rounds=args.max_rounds)
    except ValueError as err:
        return _fail(EXIT_CONFIG, str(err))

    state, report, trace = solve_scheme(args.scheme, scenario, args.rth, optimizer)
    solution = {
        "format": "conoma-solution/1",
        "scheme": args.scheme,
        "r_th": args.rth,
        "state": state.to_dict(),
        "report": report.to_dict(),
        "feasible_cells": [k for k, ok in enumerate(report.feasible) if ok],
    }
    if trace is not None:
        solution["convergence"] = {"rounds": trace.rounds_completed, "converged": trace.converged,
                                   "network_evaluations": trace.network_evaluations}
        if args.trace_csv:
            Path(args.trace_csv).write_bytes(trace.to_csv().encode())
    out = Path(args.out)
    out.write_text(json.dumps(solution, indent=1) + "\n")

    print(f"scheme={args.scheme} r_th={args.rth:g} sum_rate={report.sum_rate:.6g} "
          f"jain={report.jain:.4f} feasible={report.n_feasible}/{scenario.n_cells} "
          f"relayed={int(state.x.sum())}")
    print(f"wrote {out}")
    if report.n_feasible == 0:
        return _fail(EXIT_INFEASIBLE, "no cell meets the QoS target")
    if trace is not None and any(b < a for a, b in zip(trace.sum_rates, trace.sum_rates[1:])) \
            and report.all_feasible:
        return _fail(EXIT_INVARIANT, "sum-rate trace decreased")
    return EXIT_OK


def cmd_experiment(args) -> int:
    overrides = {
        "schemes": [args.scheme] if args.scheme else None,
        "r_th": args.rth,
        "alpha": args.alpha,
        "drops": args.drops,
        "base_seed": args.seed,
        "threads": args.threads,
        "epsilon": args.epsilon,
        "max_rounds": args.max_rounds,
    }
    data = apply_overrides(_read_json(args.config), overrides)
    spec = parse_study(data)
    out_dir = Path(args.out_dir)

    started = time.perf_counter()
    tables, evaluations, violations = {}, 0, 0
    for configs in spec.experiments():
        results = run_schemes(configs[0], [c.scheme for c in configs], spec.threads)
        evaluations += sum(r.network_evaluations for r in results)
        tables.update(figure_tables(results))
        comparison = compare_schemes(results)
        violations += len(comparison.violations)
        print(f"sweep over {configs[0].sweep_axis}:")
        print(comparison.to_text())
    if spec.convergence is not None:
        text, n_eval = convergence_table(spec.template, spec.convergence.alphas, spec.convergence.seed,
                                         spec.r_th, spec.optimizer, spec.convergence.schemes)
        tables[CONVERGENCE_FILE] = text
        evaluations += n_eval

    paths = write_tables(tables, out_dir)
    stats = {"wall_clock_s": round(time.perf_counter() - started, 3),
             "network_evaluations": evaluations, "dominance_violations": violations}
    manifest = build_manifest(spec, {k: v for k, v in overrides.items()}, [p.name for p in paths], stats)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    for p in paths:
        print(f"wrote {p}")
    print(f"wrote {out_dir / 'manifest.json'}")
    if violations:
        return _fail(EXIT_INVARIANT, f"{violations} per-drop dominance violation(s)")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_all

    results = run_all(seed=args.seed, quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        return _fail(EXIT_INVARIANT, f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed")
    print("all properties pass")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conoma",
        description="Power split, link choice and AP power control for cooperative NOMA VLC/RF cells.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="draw a scenario and write it as JSON")
    p.add_argument("--config", help="experiment JSON supplying layout/params")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("solve", help="optimise one scenario file")
    p.add_argument("scenario")
    p.add_argument("--rth", type=float, required=True, help="QoS target rate (bit/s)")
    p.add_argument("--scheme", choices=sorted(SCHEMES), default="conoma-opt")
    p.add_argument("--epsilon", type=float, default=OptimizerConfig.epsilon)
    p.add_argument("--max-rounds", type=int, default=OptimizerConfig.max_rounds)
    p.add_argument("--out", default="solution.json")
    p.add_argument("--trace-csv", help="also write the convergence trace here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run Monte-Carlo sweeps and write the figure CSVs")
    p.add_argument("--config", required=True, help="experiment JSON or a previous manifest.json")
    p.add_argument("--scheme", choices=sorted(SCHEMES))
    p.add_argument("--rth", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--drops", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("validate", help="check closed forms against brute-force references")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="smaller instance counts")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        return _fail(EXIT_CONFIG, str(err))


if __name__ == "__main__":
    sys.exit(main())
