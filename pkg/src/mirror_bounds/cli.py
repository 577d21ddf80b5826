"""Command-line entry point: solve / ci / coverage / compare / eprm-eval.

Experiment subcommands read a JSON config (schema = ExperimentConfig fields)
and accept per-field overrides; outputs are written atomically and a one-line
summary is printed.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import ci_asymptotic, ci_smd1, ci_smd2
from .core import ConfigError
from .eprm import cvar_as_eprm, eprm_evaluate, expectation_as_eprm, mean_cvar_as_eprm
from .harness import (
    ExperimentConfig,
    build_problem,
    run_coverage,
    run_trajectory_compare,
    stable_seed,
    write_json_atomic,
)
from .problems import saa_solve
from .prox import make_setup
from .solvers import (
    SolverConfig,
    msmd_ball_run,
    msmd_budget_run,
    msmd_run,
    rsa_run,
    smd_run,
    theta_step_size,
)


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    overrides = {}
    for item in args.override or []:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    data.update(overrides)
    for key in ("outdir", "replications", "master_seed", "alpha", "family", "kind"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_dict(data)


def _add_common(parser):
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="override any config field (JSON-parsed values)")
    parser.add_argument("--outdir", dest="outdir", default=None)
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--master-seed", dest="master_seed", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--family", default=None)


def _solve_problem(args):
    params = json.loads(args.params) if args.params else {}
    problem = build_problem(args.family or "instance1", args.n, params, args.seed)
    setup = make_setup(args.setup, problem.feasible_set)
    config = SolverConfig(args.budget, seed=args.seed)
    if args.algorithm == "rsa":
        run = rsa_run(problem, config)
    elif args.algorithm == "smd":
        run = smd_run(problem, setup, config)
    elif args.algorithm == "msmd":
        run = msmd_run(problem, setup, args.stages, seed=args.seed)
    elif args.algorithm == "msmd-budget":
        run = msmd_budget_run(problem, setup, args.budget, seed=args.seed)
    elif args.algorithm == "msmd-ball":
        run = msmd_ball_run(problem, setup, args.stages, seed=args.seed)
    else:
        raise ConfigError(f"unknown algorithm {args.algorithm!r}")
    return problem, setup, run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mirror-bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solver and emit a run record")
    p_solve.add_argument("--family", default="instance1")
    p_solve.add_argument("--n", type=int, required=True)
    p_solve.add_argument("--params", help="JSON instance parameters")
    p_solve.add_argument("--algorithm", default="smd",
                         choices=["rsa", "smd", "msmd", "msmd-budget", "msmd-ball"])
    p_solve.add_argument("--setup", default="euclidean", choices=["euclidean", "entropy", "pnorm"])
    p_solve.add_argument("--budget", type=int, required=True)
    p_solve.add_argument("--stages", type=int, default=3)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--out", help="write the run record JSON here")

    p_ci = sub.add_parser("ci", help="confidence interval on the optimal value")
    p_ci.add_argument("--method", required=True, choices=["smd1", "smd2", "asymptotic"])
    p_ci.add_argument("--family", default="instance1")
    p_ci.add_argument("--n", type=int, required=True)
    p_ci.add_argument("--params", help="JSON instance parameters")
    p_ci.add_argument("--setup", default=None, choices=["euclidean", "entropy", "pnorm"])
    p_ci.add_argument("--budget", type=int, required=True)
    p_ci.add_argument("--alpha", type=float, default=0.1)
    p_ci.add_argument("--theta", type=float, default=1.0)
    p_ci.add_argument("--seed", type=int, default=0)
    p_ci.add_argument("--out", help="write the interval JSON here")

    for kind in ("coverage", "compare"):
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        _add_common(p)

    p_eprm = sub.add_parser("eprm-eval", help="evaluate a polyhedral risk measure on atoms")
    p_eprm.add_argument("--model", default="cvar", choices=["cvar", "mean-cvar", "expectation"])
    p_eprm.add_argument("--epsilon", type=float, default=0.1)
    p_eprm.add_argument("--alpha0", type=float, default=0.0)
    p_eprm.add_argument("--alpha1", type=float, default=1.0)
    p_eprm.add_argument("--bound", type=float, default=1.0)
    p_eprm.add_argument("--outcomes", help="comma-separated outcome atoms")
    p_eprm.add_argument("--outcomes-file", help="JSON file with a list of atoms")

    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            problem, setup, run = _solve_problem(args)
            run.check_consistency(problem.feasible_set)
            if args.out:
                write_json_atomic(args.out, run.to_jsonable())
            print(
                f"{args.algorithm} on {problem.family}(n={args.n}): "
                f"estimate={run.value_estimate:.6g} calls={run.n_calls} budget={run.budget_used}"
            )
        elif args.command == "ci":
            params = json.loads(args.params) if args.params else {}
            problem = build_problem(args.family, args.n, params, args.seed)
            setup_name = args.setup or ("entropy" if args.family == "instance1" else "euclidean")
            setup = make_setup(setup_name, problem.feasible_set)
            if args.method == "smd1":
                run = smd_run(problem, setup, SolverConfig(args.budget, seed=args.seed))
                interval = ci_smd1(run, problem.sheet, setup, args.alpha)
            elif args.method == "smd2":
                step = theta_step_size(problem.sheet, setup, args.budget, args.theta)
                run = smd_run(
                    problem,
                    setup,
                    SolverConfig(args.budget, seed=args.seed, step_override=step, theta=args.theta),
                )
                interval = ci_smd2(run, problem.sheet, setup, problem.feasible_set, args.alpha)
            else:
                rng = np.random.default_rng(stable_seed(args.seed, "saa"))
                saa = saa_solve(problem, problem.sample_xi(rng, args.budget))
                interval = ci_asymptotic(saa, args.alpha)
            payload = {
                "method": interval.method,
                "low": interval.low,
                "high": interval.high,
                "level": interval.level,
                "tails": interval.tails,
                "constants": interval.constants,
            }
            if args.out:
                write_json_atomic(args.out, payload)
            tails = " ".join(f"{k}={v:.6g}" for k, v in interval.tails.items())
            print(f"{interval.method}: [{interval.low:.6g}, {interval.high:.6g}] level={interval.level} {tails}")
        elif args.command == "coverage":
            cfg = _load_config(args)
            out = run_coverage(cfg)
            print(f"coverage: wrote {len(out['paths'])} files to {cfg.outdir}")
        elif args.command == "compare":
            cfg = _load_config(args)
            cfg.kind = "compare"
            out = run_trajectory_compare(cfg)
            print(f"compare: wrote {len(out['paths'])} files to {cfg.outdir}")
        elif args.command == "eprm-eval":
            if args.outcomes_file:
                with open(args.outcomes_file) as fh:
                    atoms = json.load(fh)
            elif args.outcomes:
                atoms = [float(v) for v in args.outcomes.split(",")]
            else:
                raise ConfigError("provide --outcomes or --outcomes-file")
            if args.model == "cvar":
                model = cvar_as_eprm(args.epsilon, args.bound)
            elif args.model == "mean-cvar":
                model = mean_cvar_as_eprm(args.alpha0, args.alpha1, args.epsilon, args.bound)
            else:
                model = expectation_as_eprm()
            value = eprm_evaluate(model, atoms)
            print(f"{model.label} on {len(atoms)} atoms: {value:.10g}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
