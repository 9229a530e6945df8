import os
import shutil

import numpy as np
import pytest

from sbpplots import PlotJob, SchemaError, cli, read_table, render

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def golden(name):
    return os.path.join(GOLDEN, name)


def test_plotjob_validation():
    with pytest.raises(SchemaError, match="kind"):
        PlotJob(kind="heatmap", inputs=("x.csv",), output="o.png")
    with pytest.raises(SchemaError, match="no input"):
        PlotJob(kind="energy", inputs=(), output="o.png")


def test_read_table_schema_and_values():
    table = read_table(golden("slowness.csv"), "slowness")
    assert set(table) == {"branch", "angle", "s1", "s2"}
    # isotropic unit material: circles of radius 1 and 1/sqrt(3)
    radius = np.hypot(table["s1"], table["s2"])
    slow = radius[table["branch"] == 0.0]
    fast = radius[table["branch"] == 1.0]
    assert np.allclose(slow, 1.0, atol=1e-12)
    assert np.allclose(fast, 1.0 / np.sqrt(3.0), atol=1e-12)


def test_read_table_missing_column(tmp_path):
    src = open(golden("convergence.csv")).read().replace("rate", "slope")
    path = tmp_path / "bad.csv"
    path.write_text(src)
    with pytest.raises(SchemaError, match="rate"):
        read_table(str(path), "convergence")


def test_read_table_empty_rows(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("t,kinetic,strain,remainder,correction,total\n")
    with pytest.raises(SchemaError, match="no data"):
        read_table(str(path), "energy")


@pytest.mark.parametrize("kind,inputs", [
    ("convergence", ["convergence.csv"]),
    ("energy", ["energy.csv"]),
    ("slowness", ["slowness.csv"]),
    ("snapshot", [f"snapshot_block{b}.csv" for b in range(4)]),
    ("gather", [f"receiver_{r}.csv" for r in range(3)]),
])
def test_render_all_kinds_from_golden(tmp_path, kind, inputs):
    out = str(tmp_path / f"{kind}.png")
    job = PlotJob(kind=kind, inputs=tuple(golden(p) for p in inputs),
                  output=out)
    assert render(job) == out
    assert os.path.getsize(out) > 1000


def test_render_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = str(tmp_path / f"fig{k}.png")
        render(PlotJob(kind="energy", inputs=(golden("energy.csv"),),
                       output=out))
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]


def test_render_svg(tmp_path):
    out = str(tmp_path / "fig.svg")
    render(PlotJob(kind="slowness", inputs=(golden("slowness.csv"),),
                   output=out))
    assert "<svg" in open(out).read()[:500]


def test_snapshot_rejects_ragged_grid(tmp_path):
    lines = open(golden("snapshot_block0.csv")).read().splitlines()
    path = tmp_path / "ragged.csv"
    path.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(SchemaError, match="grid"):
        render(PlotJob(kind="snapshot", inputs=(str(path),),
                       output=str(tmp_path / "o.png")))


def test_cli_renders_and_reports_errors(tmp_path, capsys):
    out = str(tmp_path / "conv.png")
    assert cli.main(["convergence", golden("convergence.csv"),
                     "-o", out]) == 0
    assert os.path.exists(out)
    assert cli.main(["energy", golden("convergence.csv"),
                     "-o", str(tmp_path / "x.png")]) == 2
    assert "missing columns" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["energy"])  # missing output flag
