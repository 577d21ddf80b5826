"""Figure rendering for the `# mirror-bounds v1` experiment CSVs.

Three figure kinds:

* ``bounds-scatter``: per-replication interval limits, estimates, and the
  reference value from a per-cell coverage CSV;
* ``steps``: step-size staircases per algorithm from a steps CSV;
* ``trajectory``: averaged per-iteration series per algorithm.

Rendering is a pure function of (CSV bytes, spec): rows are sorted, colors
and z-orders fixed, and image metadata timestamps are disabled, so repeated
renders produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMA_HEADER = "# mirror-bounds v1"

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


class SchemaError(ValueError):
    """The CSV does not conform to the documented schema."""


@dataclass
class FigureSpec:
    kind: str  # "bounds-scatter" | "steps" | "trajectory"
    csv: str
    out: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    series: list[str] | None = None

    def __post_init__(self):
        if self.kind not in ("bounds-scatter", "steps", "trajectory"):
            raise SchemaError(f"unknown figure kind {self.kind!r}")

    @classmethod
    def from_json(cls, payload) -> "FigureSpec":
        if isinstance(payload, str):
            payload = json.loads(payload)
        known = {"kind", "csv", "out", "title", "xlabel", "ylabel", "series"}
        unknown = set(payload) - known
        if unknown:
            raise SchemaError(f"unknown figure spec fields: {sorted(unknown)}")
        return cls(**payload)


def load_rows(path: str) -> tuple[list[str], list[dict]]:
    """Read a schema-v1 CSV: comment header lines, then a header row, then data."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    rows = list(reader)
    if reader.fieldnames is None:
        raise SchemaError(f"{path}: missing header row")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return list(reader.fieldnames), rows


def require_columns(fieldnames: list[str], needed: list[str], path: str) -> None:
    missing = [c for c in needed if c not in fieldnames]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")


def _save(fig, spec: FigureSpec) -> str:
    os.makedirs(os.path.dirname(spec.out) or ".", exist_ok=True)
    fmt = os.path.splitext(spec.out)[1].lstrip(".").lower() or "png"
    plt.rcParams["svg.hashsalt"] = "mirror-bounds"
    metadata = {"Date": None} if fmt == "svg" else {}
    fig.savefig(spec.out, format=fmt, dpi=120, metadata=metadata)
    plt.close(fig)
    return spec.out


def _bounds_scatter(spec: FigureSpec) -> str:
    fields, rows = load_rows(spec.csv)
    require_columns(fields, ["replication", "f_star"], spec.csv)
    methods = spec.series or sorted(
        {c.split(":", 1)[0] for c in fields if c.endswith(":low")}
    )
    for m in methods:
        require_columns(fields, [f"{m}:low", f"{m}:high"], spec.csv)
    rows = [r for r in rows if r.get("failed", "0") != "1"]
    rows.sort(key=lambda r: int(r["replication"]))
    reps = [int(r["replication"]) for r in rows]
    fig, ax = plt.subplots(figsize=(8, 5))
    for i, m in enumerate(methods):
        color = _COLORS[i % len(_COLORS)]
        low = [float(r[f"{m}:low"]) for r in rows]
        high = [float(r[f"{m}:high"]) for r in rows]
        ax.scatter(reps, low, s=8, marker="v", color=color, label=f"{m} lower", zorder=3)
        ax.scatter(reps, high, s=8, marker="^", color=color, label=f"{m} upper", zorder=3)
        est_col = f"{m}:estimate"
        if est_col in fields:
            est = [float(r[est_col]) for r in rows]
            ax.scatter(reps, est, s=6, marker=".", color=color, label=f"{m} estimate", zorder=4)
    f_star = [float(r["f_star"]) for r in rows]
    ax.plot(reps, f_star, color="black", lw=1.0, label="reference value", zorder=5)
    ax.set_xlabel(spec.xlabel or "replication")
    ax.set_ylabel(spec.ylabel or "value")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", fontsize=7)
    return _save(fig, spec)


def _steps(spec: FigureSpec) -> str:
    fields, rows = load_rows(spec.csv)
    require_columns(fields, ["algorithm", "first_iteration", "last_iteration", "step"], spec.csv)
    algorithms = spec.series or sorted({r["algorithm"] for r in rows})
    fig, ax = plt.subplots(figsize=(8, 5))
    for i, alg in enumerate(algorithms):
        sel = sorted(
            (r for r in rows if r["algorithm"] == alg), key=lambda r: int(r["first_iteration"])
        )
        if not sel:
            raise SchemaError(f"{spec.csv}: no rows for series {alg!r}")
        xs, ys = [], []
        for r in sel:
            xs += [int(r["first_iteration"]), int(r["last_iteration"])]
            ys += [float(r["step"]), float(r["step"])]
        ax.plot(xs, ys, color=_COLORS[i % len(_COLORS)], label=alg, lw=1.5)
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or "step size")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, spec)


def _trajectory(spec: FigureSpec) -> str:
    fields, rows = load_rows(spec.csv)
    require_columns(fields, ["algorithm", "iteration"], spec.csv)
    value_cols = spec.series or [c for c in ("mean_estimate", "mean_objective") if c in fields]
    require_columns(fields, value_cols, spec.csv)
    algorithms = sorted({r["algorithm"] for r in rows})
    fig, ax = plt.subplots(figsize=(8, 5))
    idx = 0
    for col in value_cols:
        for alg in algorithms:
            sel = sorted((r for r in rows if r["algorithm"] == alg), key=lambda r: int(r["iteration"]))
            xs = [int(r["iteration"]) for r in sel]
            ys = [float(r[col]) for r in sel]
            ax.plot(xs, ys, color=_COLORS[idx % len(_COLORS)], label=f"{alg} {col}", lw=1.2)
            idx += 1
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or "value")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, spec)


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if spec.kind == "bounds-scatter":
        return _bounds_scatter(spec)
    if spec.kind == "steps":
        return _steps(spec)
    return _trajectory(spec)
