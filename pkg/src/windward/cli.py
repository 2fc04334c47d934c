"""Command-line front end.

Subcommands: solve, simulate, regions, oracle-check, validate.
Exit codes: 0 success, 1 validation error, 2 solver non-convergence,
3 I/O failure.  The default output directory can be overridden with the
WINDWARD_OUT environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, scenario_io, solver
from .simulate import mc_stats, simulate as run_simulation

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_IO = 3

ORACLE_STARTS = ((-0.7, 0.0, 0.0), (0.0, 0.0, 0.0), (0.7, 0.0, 0.0))


def _out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get("WINDWARD_OUT", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(args):
    return scenario_io.load_scenario_with_config(
        args.scenario, sigma=args.sigma, drift=args.drift,
        dx=args.dx, dt=args.dt, controls=args.controls)


def _add_scenario_args(p):
    p.add_argument("scenario", help="scenario file or preset name (test1/test2/test3)")
    p.add_argument("--sigma", type=float, default=None, help="override wind diffusion")
    p.add_argument("--drift", type=float, default=None, help="override wind drift")
    p.add_argument("--dx", type=float, default=None, help="override all grid steps")
    p.add_argument("--dt", type=float, default=None, help="override the time step")
    p.add_argument("--controls", type=int, default=None,
                   help="override the control sample count")


def cmd_solve(args) -> int:
    scenario, config = _load(args)
    if args.max_iterations is not None:
        config = replace(config, max_iterations=args.max_iterations)
    if args.tolerance is not None:
        config = replace(config, tolerance=args.tolerance)
    field, policy = solver.solve(scenario, config)
    out = _out_dir(args.out)
    scenario_io.export_value(field, out / "value.txt")
    scenario_io.export_policy(policy, out / "policy.txt")
    scenario_io.write_manifest(
        out / "manifest.json", command="solve", scenario=str(args.scenario),
        overrides={k: getattr(args, k) for k in
                   ("sigma", "drift", "dx", "dt", "controls")},
        tolerance=config.tolerance, max_iterations=config.max_iterations,
        sweep=config.sweep, iterations=field.iterations,
        residual=field.residual, converged=field.converged)
    if not field.converged:
        print(f"not converged: residual {field.residual:g} after "
              f"{field.iterations} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"converged in {field.iterations} iterations, "
          f"residual {field.residual:g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario, _ = _load(args)
    policy = scenario_io.import_policy(Path(args.policy) / "policy.txt")
    x0 = tuple(float(v) for v in args.start.split(","))
    out = _out_dir(args.out)
    for i in range(args.runs):
        traj = run_simulation(scenario, policy, x0, args.mode,
                              seed=args.seed + i, t_max=args.tmax)
        scenario_io.export_trajectory(traj, out / f"trajectory_{i:04d}.txt")
    stats = mc_stats(scenario, policy, x0, args.mode, n_runs=args.runs,
                     seed0=args.seed, t_max=args.tmax)
    scenario_io.export_stats({
        "runs": stats.n_runs,
        "fraction_reached": stats.fraction_reached,
        "arrival_mean": stats.arrival_mean,
        "arrival_std": stats.arrival_std,
        "switches_mean": stats.switches_mean,
        "switches_std": stats.switches_std,
    }, out / "stats.txt")
    scenario_io.write_manifest(
        out / "manifest.json", command="simulate", scenario=str(args.scenario),
        policy=str(args.policy), start=args.start, mode=args.mode,
        seed=args.seed, runs=args.runs, tmax=args.tmax)
    print(f"{stats.fraction_reached:.0%} of {args.runs} runs reached the target")
    return EXIT_OK


def cmd_regions(args) -> int:
    scenario, _ = _load(args)
    policy = scenario_io.import_policy(Path(args.policy) / "policy.txt")
    m = analysis.switching_map(policy, args.mode, args.x3)
    out = _out_dir(args.out)
    path = out / f"regions_q{args.mode}.txt"
    np.savetxt(path, m.labels.T[::-1], fmt="%d",
               header=f"switch labels, mode {args.mode}, x3={m.x3!r}, north-up")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    scenario, _ = _load(args)
    field = scenario_io.import_value(Path(args.policy) / "value.txt")
    worst = 0.0
    for x0 in ORACLE_STARTS:
        for q in (1, 2):
            ref = analysis.analytic_value(x0, q, scenario)
            got = solver.interpolate(field, q, x0)
            rel = abs(got - ref) / ref
            worst = max(worst, rel)
            print(f"start {x0} q={q}: solver {got:.4f} oracle {ref:.4f} "
                  f"rel.err {rel:.3%}")
    if worst > args.rel_tol:
        print(f"worst relative error {worst:.3%} exceeds {args.rel_tol:.0%}",
              file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario_io.load_scenario(args.scenario)
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="windward",
                                 description="stochastic hybrid sailing route planner")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a scenario and export value/policy")
    _add_scenario_args(p)
    p.add_argument("--out", default=None)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("simulate", help="simulate trajectories under a solved policy")
    _add_scenario_args(p)
    p.add_argument("--policy", required=True, help="directory written by solve")
    p.add_argument("--start", required=True, help="x1,x2,x3")
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--tmax", type=float, default=200.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("regions", help="export the switching map of one x3 plane")
    _add_scenario_args(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--x3", type=float, default=0.0)
    p.add_argument("--mode", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_regions)

    p = sub.add_parser("oracle-check",
                       help="compare a solved field with the analytic oracle")
    _add_scenario_args(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--rel-tol", type=float, default=0.10)
    p.set_defaults(fn=cmd_oracle_check)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except scenario_io.ScenarioError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
