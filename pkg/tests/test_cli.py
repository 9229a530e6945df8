import csv
import json
import os

import numpy as np
import pytest
import yaml

from sbpelastic import cli


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_yaml(path, data):
    with open(path, "w") as f:
        yaml.safe_dump(data, f)
    return str(path)


def test_load_config_defaults_and_merge(tmp_path):
    assert cli.load_config()["operator"]["order"] == 4
    path = write_yaml(tmp_path / "c.yaml",
                      {"operator": {"order": 6}, "run": {"cfl": 0.25}})
    cfg = cli.load_config(path)
    assert cfg["operator"]["order"] == 6
    assert cfg["operator"]["stencil"] == "narrow"  # untouched default
    assert cfg["run"]["cfl"] == 0.25


def test_load_config_rejects_unknown_keys(tmp_path):
    path = write_yaml(tmp_path / "c.yaml", {"operater": {"order": 2}})
    with pytest.raises(cli.ConfigError, match="operater"):
        cli.load_config(path)


def test_load_config_bad_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("run: [unclosed")
    with pytest.raises(cli.ConfigError, match="cannot read"):
        cli.load_config(str(path))


def test_write_csv_atomic_and_formatted(tmp_path):
    path = tmp_path / "t.csv"
    cli.write_csv(str(path), ["a", "b"], [[1, 0.5], {"a": 2, "b": 0.25}])
    rows = read_csv(path)
    assert rows == [{"a": "1", "b": "0.5"}, {"a": "2", "b": "0.25"}]
    assert [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")] == []


def test_argparse_rejects_unknown_subcommand_and_flag(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["transmogrify"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["certify", "--frobnicate"])
    assert e.value.code == 2


def test_certify_writes_report_and_manifest(tmp_path):
    out = str(tmp_path)
    assert cli.main(["certify", "--order", "2", "--out-dir", out]) == 0
    rows = read_csv(tmp_path / "certify.csv")
    assert {r["order"] for r in rows} == {"2"}
    assert {r["n_points"] for r in rows} == {"12", "24"}
    assert all(r["passed"] == "1" for r in rows)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["subcommand"] == "certify"
    assert "numpy" in manifest["versions"]
    assert manifest["outputs"] == ["certify.csv"]


def test_certify_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["certify", "--order", "4",
                         "--out-dir", str(out)]) == 0
    assert (a / "certify.csv").read_bytes() == (b / "certify.csv").read_bytes()


def test_audit_small_domain(tmp_path):
    path = write_yaml(tmp_path / "c.yaml", {"audit": {"n": 7}})
    assert cli.main(["audit", "--order", "2", "--seed", "3",
                     "--config", path, "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "audit.csv")
    assert list(rows[0]) == ["order", "stencil", "asymmetry_rel",
                             "max_eig_scaled", "spectral_radius"]
    assert float(rows[0]["asymmetry_rel"]) <= 1e-13
    assert float(rows[0]["max_eig_scaled"]) <= 1e-10


def test_audit_size_cap_is_config_error(tmp_path, capsys):
    path = write_yaml(tmp_path / "c.yaml",
                      {"audit": {"n": 25, "max_dofs": 100}})
    assert cli.main(["audit", "--order", "2", "--config", path,
                     "--out-dir", str(tmp_path)]) == 2
    assert "capped" in capsys.readouterr().err


def test_convergence_coarse_sweep(tmp_path):
    path = write_yaml(tmp_path / "c.yaml",
                      {"convergence": {"kind": "isotropic",
                                       "resolutions": [10, 14],
                                       "t_final": 0.2}})
    assert cli.main(["convergence", "--orders", "2", "--config", path,
                     "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "convergence.csv")
    assert list(rows[0]) == ["h_inv", "ppwl", "order", "stencil",
                             "log10_error", "rate"]
    assert [r["h_inv"] for r in rows] == ["10", "14"]
    assert np.isfinite(float(rows[1]["rate"]))


def test_convergence_rejects_unknown_kind(tmp_path, capsys):
    path = write_yaml(tmp_path / "c.yaml",
                      {"convergence": {"kind": "poroelastic"}})
    assert cli.main(["convergence", "--config", path,
                     "--out-dir", str(tmp_path)]) == 2
    assert "poroelastic" in capsys.readouterr().err


def test_simulate_outputs_all_schemas(tmp_path):
    path = write_yaml(
        tmp_path / "c.yaml",
        {"geometry": {"n": 11},
         "run": {"t_final": 0.1, "energy_cadence": 2,
                 "receivers": [[1, 0.5, 0.5]],
                 "source": {"block": 0, "position": [0.4, 0.6],
                            "force": [0.0, 1.0], "peak_frequency": 4.0,
                            "delay": 0.05}}})
    assert cli.main(["simulate", "--config", path,
                     "--out-dir", str(tmp_path)]) == 0
    energy = read_csv(tmp_path / "energy.csv")
    assert list(energy[0]) == ["t", "kinetic", "strain", "remainder",
                               "correction", "total"]
    assert float(energy[0]["total"]) == 0.0       # quiescent start
    assert float(energy[-1]["total"]) > 0.0       # source injected energy
    receiver = read_csv(tmp_path / "receiver_0.csv")
    assert list(receiver[0]) == ["t", "u1", "u2", "v1", "v2"]
    snap = read_csv(tmp_path / "snapshot_block0.csv")
    assert list(snap[0]) == ["i", "j", "X1", "X2", "u1", "u2"]
    assert len(snap) == 11 * 11
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "energy.csv" in manifest["outputs"]


def test_simulate_rejects_bad_receiver(tmp_path, capsys):
    path = write_yaml(tmp_path / "c.yaml",
                      {"geometry": {"n": 11},
                       "run": {"t_final": 0.05,
                               "receivers": [[0, 1.5, 0.5]]}})
    assert cli.main(["simulate", "--config", path,
                     "--out-dir", str(tmp_path)]) == 2
    assert "outside" in capsys.readouterr().err


def test_speeds_isotropic_circles(tmp_path):
    assert cli.main(["speeds", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "slowness.csv")
    for row in rows:
        r = np.hypot(float(row["s1"]), float(row["s2"]))
        expected = 1.0 if row["branch"] == "0" else 1.0 / np.sqrt(3.0)
        assert r == pytest.approx(expected, rel=1e-12)


def test_override_parsing_errors():
    assert cli.main(["certify", "--orders", "2,four"]) == 2
    assert cli.main(["certify", "--orders", "3"]) == 2
