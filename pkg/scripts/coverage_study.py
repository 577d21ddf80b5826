#!/usr/bin/env python3
"""Coverage / width-ratio study on the two benchmark families.

Desk scale by default (250 replications per cell, pool 10k); `--full` switches
to the full 625-replication / 100k-pool protocol (slow).  Outputs land in
`--outdir` as schema-v1 CSVs; render figures with the plots package, e.g.

    mirror-bounds-plot --spec '{"kind": "bounds-scatter",
                                "csv": "results/coverage/coverage_instance1_40_1000.csv",
                                "out": "results/coverage/bounds_40_1000.png"}'
"""

import argparse

from mirror_bounds.harness import ExperimentConfig, run_coverage


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results/coverage")
    ap.add_argument("--family", choices=["instance1", "instance2"], default="instance1")
    ap.add_argument("--full", action="store_true", help="full-scale replication counts")
    ap.add_argument("--master-seed", type=int, default=1729)
    ap.add_argument("--replications", type=int, default=None,
                    help="override the replication count per cell")
    args = ap.parse_args()

    reps = args.replications or (625 if args.full else 250)
    if args.family == "instance1":
        params = {"alpha0": 0.1, "alpha1": 0.9}
        grid = [[40, 1000], [60, 1000], [80, 1000], [100, 1000]]
        if args.full:
            grid += [[40, 5000], [100, 5000], [40, 10000], [100, 10000]]
        setup = "entropy"
        thetas = [0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0]
    else:
        params = {"alpha0": 0.9, "alpha1": 0.1, "eps": 0.9,
                  "pool_size": 100_000 if args.full else 10_000}
        grid = [[40, 100], [100, 100]] + ([[40, 10_000], [100, 10_000]] if args.full else [])
        setup = "euclidean"
        thetas = [1.0]

    cfg = ExperimentConfig(
        kind="coverage",
        family=args.family,
        params=params,
        grid=grid,
        replications=reps,
        filter_fraction=0.2,
        alpha=0.1,
        thetas=thetas,
        master_seed=args.master_seed,
        outdir=args.outdir,
        setup=setup,
    )
    out = run_coverage(cfg)
    for row in out["summary"]:
        print(
            f"n={row['n']:4d} N={row['n_calls']:6d} {row['method']:>12}: "
            f"coverage {row['coverage']:.3f} (all {row['coverage_all']:.3f}), "
            f"mean width {row['mean_width']:.5g}"
        )
    for row in out["ratios"]:
        print(
            f"n={row['n']:4d} N={row['n_calls']:6d} width ratio "
            f"{row['numerator']}/{row['denominator']}: {row['mean_ratio']:.3f}"
        )


if __name__ == "__main__":
    main()
