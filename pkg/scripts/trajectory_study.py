#!/usr/bin/env python3
"""Single-run vs multistep trajectory comparison on the regularized instances.

Writes per-iteration averaged estimate/objective curves, the step schedules,
and final-objective tables; render with

    mirror-bounds-plot --spec '{"kind": "trajectory",
                                "csv": "results/compare/trajectory_instance1_50_1000.csv",
                                "out": "results/compare/traj_50_1000.png"}'
"""

import argparse

from mirror_bounds.harness import ExperimentConfig, run_trajectory_compare


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/compare")
    ap.add_argument("--family", choices=["instance1", "instance2"], default="instance1")
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--large", action="store_true", help="include the 10k-call cells")
    ap.add_argument("--master-seed", type=int, default=1729)
    args = ap.parse_args()

    if args.family == "instance1":
        n0 = 50
        params = {"alpha0": 0.1, "alpha1": 0.9, "lam0": 4.0, "norm": "l2"}
        grid = [[50, 1000], [100, 5000]]
        if args.large:
            grid += [[500, 10_000], [1000, 10_000]]
        start = [1.0] + [0.0] * (n0 - 1)  # vertex start; rebuilt per cell below
    else:
        params = {"alpha0": 0.9, "alpha1": 0.1, "eps": 0.9, "lam0": 1.0, "pool_size": 10_000}
        grid = [[50, 1000], [100, 5000]]
        if args.large:
            grid += [[500, 10_000], [1000, 10_000]]

    for n, n_calls in grid:
        if args.family == "instance1":
            start = [1.0] + [0.0] * (n - 1)
        else:
            start = [0.0, 1.0] + [0.0] * (n - 1)
        cfg = ExperimentConfig(
            kind="compare",
            family=args.family,
            params=params,
            grid=[[n, n_calls]],
            runs=args.runs,
            stages=args.stages,
            trace_stride=max(1, n_calls // 100),
            master_seed=args.master_seed,
            outdir=args.outdir,
            setup="euclidean",
            sheet_overrides={"growth_modulus": 1.0},
            start=start,
        )
        out = run_trajectory_compare(cfg)
        meta = out["meta"][0]
        print(
            f"n={meta['n']:5d} N={meta['n_calls']:6d}: reference value {meta['f_star']:.5f}, "
            f"stage lengths {meta['schedule']}"
        )


if __name__ == "__main__":
    main()
