"""Figure rendering: determinism, schema errors, all kinds on real outputs.

The data/ fixtures are genuine experiment CSVs produced by the solver
package's batch harness; this package only consumes the documented CSV
contract.
"""

import json
import os

import pytest

from mirror_bounds_plots import FigureSpec, SchemaError, render
from mirror_bounds_plots.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")


def spec_for(kind, csv_name, out, **kw):
    return FigureSpec(kind=kind, csv=os.path.join(DATA, csv_name), out=str(out), **kw)


def test_all_kinds_render_from_harness_outputs(tmp_path):
    outputs = [
        render(spec_for("bounds-scatter", "coverage_instance1_12_300.csv", tmp_path / "b.png")),
        render(spec_for("steps", "steps_instance1_10_200.csv", tmp_path / "s.png")),
        render(spec_for("trajectory", "trajectory_instance1_10_200.csv", tmp_path / "t.png")),
    ]
    for path in outputs:
        assert os.path.getsize(path) > 1000


def test_render_is_byte_deterministic(tmp_path):
    for ext in ("png", "svg"):
        a = render(spec_for("trajectory", "trajectory_instance1_10_200.csv", tmp_path / f"a.{ext}"))
        b = render(spec_for("trajectory", "trajectory_instance1_10_200.csv", tmp_path / f"b.{ext}"))
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read(), ext


def test_bounds_scatter_determinism(tmp_path):
    a = render(spec_for("bounds-scatter", "coverage_instance1_12_300.csv", tmp_path / "a.png"))
    b = render(spec_for("bounds-scatter", "coverage_instance1_12_300.csv", tmp_path / "b.png"))
    with open(a, "rb") as fa, open(b, "rb") as fb:
        assert fa.read() == fb.read()


def test_series_selection(tmp_path):
    path = render(
        spec_for(
            "bounds-scatter",
            "coverage_instance1_12_300.csv",
            tmp_path / "sel.png",
            series=["smd1"],
            title="analytic interval only",
        )
    )
    assert os.path.exists(path)


def test_missing_column_error_names_it(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("# mirror-bounds v1\nalgorithm,iteration\nsmd,1\n")
    with pytest.raises(SchemaError, match="mean_estimate"):
        render(FigureSpec(kind="trajectory", csv=str(bad), out=str(tmp_path / "x.png"),
                          series=["mean_estimate"]))


def test_empty_body_is_an_error_and_no_image(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("# mirror-bounds v1\nalgorithm,iteration,mean_estimate\n")
    out = tmp_path / "nothing.png"
    with pytest.raises(SchemaError, match="no data rows"):
        render(FigureSpec(kind="trajectory", csv=str(empty), out=str(out)))
    assert not out.exists()


def test_unknown_kind_rejected():
    with pytest.raises(SchemaError):
        FigureSpec(kind="pie", csv="x.csv", out="x.png")


def test_cli_with_spec_file_and_inline(tmp_path, capsys):
    spec = {
        "kind": "steps",
        "csv": os.path.join(DATA, "steps_instance1_10_200.csv"),
        "out": str(tmp_path / "cli.png"),
    }
    spec_path = tmp_path / "fig.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["--spec", str(spec_path)]) == 0
    assert (tmp_path / "cli.png").exists()

    spec["out"] = str(tmp_path / "cli2.svg")
    assert main(["--spec", json.dumps(spec)]) == 0
    assert (tmp_path / "cli2.svg").exists()


def test_cli_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# mirror-bounds v1\na,b\n")
    spec = {"kind": "trajectory", "csv": str(bad), "out": str(tmp_path / "x.png")}
    assert main(["--spec", json.dumps(spec)]) == 2
    assert "error" in capsys.readouterr().err
