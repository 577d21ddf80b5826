"""Experiment orchestration: coverage studies, width ratios, trajectory comparisons.

Outputs are CSV files with a `# mirror-bounds v1` schema header.  Every data
CSV is byte-deterministic given (config, master seed): replication seeds are
fanned out by hashing (master, family, n, N, replication), rows are sorted
before writing, and floats use a fixed format.  Wall-clock timings go to
separate `timings_*.csv` files which are excluded from that guarantee.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import ci_asymptotic, ci_smd1, ci_smd2
from .core import ConfigError, ConvergenceError, NumericalError, ProblemSpec
from .problems import gen_instance1, gen_instance2, exact_optimum, saa_solve
from .prox import make_setup
from .solvers import (
    SolverConfig,
    budget_fit_schedule,
    msmd_run,
    rsa_run,
    rsa_step_size,
    smd_run,
    theta_step_size,
)

SCHEMA_HEADER = "# mirror-bounds v1"
_FLOAT_FMT = "%.12g"


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from the given parts (platform independent)."""
    digest = hashlib.sha256("|".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def write_csv_atomic(path: str, fieldnames: list[str], rows: list[dict]) -> str:
    """Write header + rows to a temp file and atomically move it into place."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    buf = io.StringIO()
    buf.write(SCHEMA_HEADER + "\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = {}
        for key in fieldnames:
            val = row.get(key, "")
            if isinstance(val, float):
                out[key] = _FLOAT_FMT % val
            else:
                out[key] = val
        writer.writerow(out)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)
    return path


def write_json_atomic(path: str, payload) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


@dataclass
class ExperimentConfig:
    """Batch-experiment description; JSON-serializable, every field CLI-overridable."""

    kind: str = "coverage"  # "coverage" | "compare" | "solve"
    family: str = "instance1"
    params: dict = field(default_factory=dict)
    grid: list = field(default_factory=lambda: [[40, 1000]])
    replications: int = 200
    filter_fraction: float = 0.2
    alpha: float = 0.1
    thetas: list = field(default_factory=lambda: [1.0])
    master_seed: int = 2024
    outdir: str = "results"
    setup: str | None = None
    runs: int = 50
    stages: int = 3
    trace_stride: int = 20
    workers: int | None = None
    solver_tol: float | None = None
    sheet_overrides: dict = field(default_factory=dict)
    start: list | None = None

    _KIND_ALIASES = {"width-sweep": "coverage", "trajectory-compare": "compare", "single-solve": "solve"}

    def __post_init__(self):
        self.kind = self._KIND_ALIASES.get(self.kind, self.kind)
        if self.kind not in ("coverage", "compare", "solve"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1 or self.runs < 1:
            raise ConfigError("replication counts must be >= 1")
        if not 0.0 <= self.filter_fraction < 1.0:
            raise ConfigError("filter fraction must lie in [0, 1)")
        if not self.grid:
            raise ConfigError("grid must be nonempty")
        self.grid = [tuple(int(v) for v in cell) for cell in self.grid]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = [list(cell) for cell in self.grid]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def effective_workers(self) -> int:
        env = os.environ.get("MIRROR_BOUNDS_WORKERS")
        cap = int(env) if env else None
        w = self.workers or 1
        if cap is not None:
            w = min(w, max(1, cap))
        return max(1, w)


def build_problem(family: str, n: int, params: dict, seed: int) -> ProblemSpec:
    if family == "instance1":
        return gen_instance1(n=n, seed=seed, **params)
    if family == "instance2":
        return gen_instance2(n=n, seed=seed, **params)
    raise ConfigError(f"unknown problem family {family!r}")


def apply_sheet_overrides(problem: ProblemSpec, overrides: dict) -> ProblemSpec:
    """Replace constant-sheet fields (e.g. a conservative growth modulus)."""
    if overrides:
        problem.sheet = dataclasses.replace(problem.sheet, **overrides)
    return problem


def default_setup_name(cfg: ExperimentConfig) -> str:
    if cfg.setup:
        return cfg.setup
    return "entropy" if cfg.family == "instance1" else "euclidean"


def _coverage_replication(cfg_dict: dict, n: int, n_calls: int, rep: int) -> dict:
    """One coverage replication: fresh instance, reference optimum, all intervals."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    seed_inst = stable_seed(cfg.master_seed, cfg.family, n, n_calls, rep, "instance")
    out = {"n": n, "n_calls": n_calls, "replication": rep, "failed": 0, "error": ""}
    try:
        problem = build_problem(cfg.family, n, cfg.params, seed_inst)
        apply_sheet_overrides(problem, cfg.sheet_overrides)
        setup = make_setup(default_setup_name(cfg), problem.feasible_set)
        ref = exact_optimum(problem, cfg.solver_tol)
        out["f_star"] = ref.value
        out["ref_gap"] = ref.gap
        methods = {}

        t0 = time.perf_counter()
        run1 = smd_run(
            problem, setup, SolverConfig(n_calls, seed=stable_seed(seed_inst, "run-smd1"))
        )
        interval = ci_smd1(run1, problem.sheet, setup, cfg.alpha)
        methods["smd1"] = (interval, time.perf_counter() - t0)
        out["smd1:estimate"] = run1.value_estimate

        for theta in cfg.thetas:
            t0 = time.perf_counter()
            step = theta_step_size(problem.sheet, setup, n_calls, theta)
            run2 = smd_run(
                problem,
                setup,
                SolverConfig(
                    n_calls,
                    seed=stable_seed(seed_inst, "run-smd2", theta),
                    step_override=step,
                    theta=theta,
                ),
            )
            interval = ci_smd2(run2, problem.sheet, setup, problem.feasible_set, cfg.alpha)
            methods[f"smd2@{_FLOAT_FMT % theta}"] = (interval, time.perf_counter() - t0)
            out[f"smd2@{_FLOAT_FMT % theta}:estimate"] = run2.value_estimate

        t0 = time.perf_counter()
        rng = np.random.default_rng(stable_seed(seed_inst, "saa-sample"))
        sample = problem.sample_xi(rng, n_calls)
        saa = saa_solve(problem, sample, cfg.solver_tol)
        interval = ci_asymptotic(saa, cfg.alpha)
        methods["asymptotic"] = (interval, time.perf_counter() - t0)
        out["asymptotic:estimate"] = saa.value

        for name, (interval, seconds) in methods.items():
            out[f"{name}:low"] = interval.low
            out[f"{name}:high"] = interval.high
            out[f"{name}:width"] = interval.width
            out[f"{name}:covered"] = int(interval.contains(ref.value))
            out[f"{name}:seconds"] = seconds
    except (ConvergenceError, NumericalError) as exc:
        out["failed"] = 1
        out["error"] = f"{type(exc).__name__}: {exc}"
    return out


def _method_names(cfg: ExperimentConfig) -> list[str]:
    return ["smd1"] + [f"smd2@{_FLOAT_FMT % t}" for t in cfg.thetas] + ["asymptotic"]


def run_coverage(cfg: ExperimentConfig) -> dict:
    """Coverage/width study over the (n, N) grid.

    Per cell: ``replications`` fresh instances, three interval constructions
    each, then the smallest-asymptotic-width filter before aggregation.
    Returns summary rows and the written file paths.
    """
    methods = _method_names(cfg)
    cfg_dict = cfg.to_dict()
    summary_rows, ratio_rows, paths = [], [], []
    workers = cfg.effective_workers()
    for n, n_calls in cfg.grid:
        reps = list(range(cfg.replications))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_coverage_replication, [cfg_dict] * len(reps), [n] * len(reps), [n_calls] * len(reps), reps))
        else:
            results = [_coverage_replication(cfg_dict, n, n_calls, r) for r in reps]
        results.sort(key=lambda row: row["replication"])
        good = [r for r in results if not r["failed"]]
        failures = len(results) - len(good)
        n_drop = math.floor(cfg.filter_fraction * cfg.replications)
        if len(good) <= n_drop:
            raise ConvergenceError(f"cell ({n},{n_calls}): too many failures to apply the filter")
        # drop the replications with the smallest asymptotic widths
        order = sorted(good, key=lambda row: (row["asymptotic:width"], row["replication"]))
        dropped = {row["replication"] for row in order[:n_drop]}
        for row in results:
            row["filtered"] = int(row["replication"] in dropped)
        survivors = [row for row in good if not row["filtered"]]

        detail_fields = (
            ["n", "n_calls", "replication", "failed", "filtered", "f_star", "ref_gap"]
            + [f"{m}:{c}" for m in methods for c in ("low", "high", "estimate", "width", "covered")]
            + ["error"]
        )
        detail_rows = []
        timing_rows = []
        for row in results:
            detail_rows.append({k: row.get(k, "") for k in detail_fields})
            for m in methods:
                if f"{m}:seconds" in row:
                    timing_rows.append(
                        {"n": n, "n_calls": n_calls, "replication": row["replication"], "method": m,
                         "seconds": row[f"{m}:seconds"]}
                    )
        cell_tag = f"{cfg.family}_{n}_{n_calls}"
        paths.append(write_csv_atomic(os.path.join(cfg.outdir, f"coverage_{cell_tag}.csv"), detail_fields, detail_rows))
        paths.append(
            write_csv_atomic(
                os.path.join(cfg.outdir, f"timings_{cell_tag}.csv"),
                ["n", "n_calls", "replication", "method", "seconds"],
                timing_rows,
            )
        )
        for m in methods:
            cov = float(np.mean([row[f"{m}:covered"] for row in survivors]))
            cov_all = float(np.mean([row[f"{m}:covered"] for row in good]))
            width = float(np.mean([row[f"{m}:width"] for row in survivors]))
            summary_rows.append(
                {
                    "family": cfg.family,
                    "n": n,
                    "n_calls": n_calls,
                    "method": m,
                    "coverage": cov,
                    "coverage_all": cov_all,
                    "mean_width": width,
                    "replications_used": len(survivors),
                    "failures": failures,
                }
            )
        pairs = [(m, "asymptotic") for m in methods if m != "asymptotic"]
        pairs += [(m, "smd1") for m in methods if m.startswith("smd2@")]
        for num, den in pairs:
            ratios = [row[f"{num}:width"] / row[f"{den}:width"] for row in survivors]
            ratio_rows.append(
                {
                    "family": cfg.family,
                    "n": n,
                    "n_calls": n_calls,
                    "numerator": num,
                    "denominator": den,
                    "mean_ratio": float(np.mean(ratios)),
                    "replications_used": len(survivors),
                }
            )
    paths.append(
        write_csv_atomic(
            os.path.join(cfg.outdir, f"coverage_summary_{cfg.family}.csv"),
            ["family", "n", "n_calls", "method", "coverage", "coverage_all", "mean_width",
             "replications_used", "failures"],
            summary_rows,
        )
    )
    paths.append(
        write_csv_atomic(
            os.path.join(cfg.outdir, f"ratios_{cfg.family}.csv"),
            ["family", "n", "n_calls", "numerator", "denominator", "mean_ratio", "replications_used"],
            ratio_rows,
        )
    )
    return {"summary": summary_rows, "ratios": ratio_rows, "paths": paths}


def _compare_cell(cfg: ExperimentConfig, n: int, n_calls: int) -> dict:
    """Paired single-run vs multistep comparison on one instance."""
    seed_inst = stable_seed(cfg.master_seed, cfg.family, n, n_calls, "compare-instance")
    problem = build_problem(cfg.family, n, cfg.params, seed_inst)
    apply_sheet_overrides(problem, cfg.sheet_overrides)
    setup = make_setup(cfg.setup or "euclidean", problem.feasible_set)
    start = np.array(cfg.start, dtype=float) if cfg.start is not None else problem.feasible_set.start_point()
    radius = problem.feasible_set.max_distance_from(start, setup.norm)
    schedule = budget_fit_schedule(problem.sheet, setup, n_calls, cfg.stages, radius)

    traj: dict[tuple[str, int], list[float]] = {}
    finals = []
    for run_idx in range(cfg.runs):
        seed = stable_seed(cfg.master_seed, cfg.family, n, n_calls, run_idx, "compare-run")
        single = rsa_run(
            problem,
            SolverConfig(
                n_calls, seed=seed, start=start, trace_stride=cfg.trace_stride, eval_exact_f=True
            ),
        )
        multi = msmd_run(
            problem,
            setup,
            cfg.stages,
            seed=seed,
            start=start,
            schedule=schedule,
            trace_stride=cfg.trace_stride,
            eval_exact_f=True,
        )
        for tag, run in (("smd", single), ("mssmd", multi)):
            for iteration, estimate, objective in run.value_trace:
                traj.setdefault((tag, iteration), []).append((estimate, objective))
            finals.append(
                {
                    "run": run_idx,
                    "algorithm": tag,
                    "final_objective": problem.exact_f(run.solution),
                    "final_estimate": run.value_estimate,
                }
            )
    traj_rows = [
        {
            "algorithm": tag,
            "iteration": iteration,
            "mean_estimate": float(np.mean([v[0] for v in vals])),
            "mean_objective": float(np.mean([v[1] for v in vals])),
        }
        for (tag, iteration), vals in sorted(traj.items())
    ]
    step_rows = [
        {"algorithm": "smd", "stage": 1, "first_iteration": 1, "last_iteration": n_calls,
         "step": rsa_step_size(problem.sheet, n_calls, radius)}
    ]
    offset = 0
    for t, (length, step) in enumerate(zip(schedule.stage_lengths, schedule.stage_steps), start=1):
        step_rows.append(
            {"algorithm": "mssmd", "stage": t, "first_iteration": offset + 1,
             "last_iteration": offset + length, "step": step}
        )
        offset += length
    ref = exact_optimum(problem, cfg.solver_tol)
    meta = {
        "n": n,
        "n_calls": n_calls,
        "f_star": float(ref.value),
        "stages": cfg.stages,
        "schedule": list(schedule.stage_lengths),
    }
    return {"traj": traj_rows, "steps": step_rows, "finals": finals, "meta": meta}


def run_trajectory_compare(cfg: ExperimentConfig) -> dict:
    """Paired-seed single-run vs multistep study over the grid; writes CSVs."""
    paths = []
    metas = []
    for n, n_calls in cfg.grid:
        cell = _compare_cell(cfg, n, n_calls)
        tag = f"{cfg.family}_{n}_{n_calls}"
        paths.append(
            write_csv_atomic(
                os.path.join(cfg.outdir, f"trajectory_{tag}.csv"),
                ["algorithm", "iteration", "mean_estimate", "mean_objective"],
                cell["traj"],
            )
        )
        paths.append(
            write_csv_atomic(
                os.path.join(cfg.outdir, f"steps_{tag}.csv"),
                ["algorithm", "stage", "first_iteration", "last_iteration", "step"],
                cell["steps"],
            )
        )
        paths.append(
            write_csv_atomic(
                os.path.join(cfg.outdir, f"finals_{tag}.csv"),
                ["run", "algorithm", "final_objective", "final_estimate"],
                cell["finals"],
            )
        )
        metas.append(cell["meta"])
    paths.append(write_json_atomic(os.path.join(cfg.outdir, f"compare_{cfg.family}.json"), metas))
    return {"meta": metas, "paths": paths}
