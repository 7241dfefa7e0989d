import json
from pathlib import Path

from click.testing import CliRunner

from src.cli import main

NEAREST_NEIGHBOUR_RETURN = {
    "experiment": "return-exponent",
    "group": {"kind": "ZK", "k": 1},
    "measure": {
        "mu0_weight": 1.0,
        "mu0_atoms": [
            {"element": "-1", "mass": 0.25},
            {"element": "0", "mass": 0.5},
            {"element": "1", "mass": 0.25},
        ],
    },
    "n_range": [4, 8, 16, 32, 64],
    "policy": {"eps_per_step": 0.0, "support_radius": 256},
}


def test_cli_runs_experiment(tmp_path: Path, write_config):
    config = write_config(NEAREST_NEIGHBOUR_RETURN)
    out_dir = tmp_path / "out"
    result = CliRunner().invoke(main, ["run", str(config), "--out", str(out_dir), "--threads", "2"])
    assert result.exit_code == 0, result.output
    assert "return-exponent: PASS" in result.output
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    for name, digest in manifest["files"].items():
        assert f"{name}  {digest}" in result.output


def test_cli_threads_from_environment(tmp_path: Path, write_config, monkeypatch):
    monkeypatch.setenv("LONGJUMP_THREADS", "3")
    config = write_config(NEAREST_NEIGHBOUR_RETURN)
    result = CliRunner().invoke(main, ["run", str(config), "--out", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    metadata = json.loads((tmp_path / "out" / "metadata.json").read_text(encoding="utf-8"))
    assert metadata["threads"] == 3


def test_cli_rejects_invalid_config(write_config):
    document = dict(NEAREST_NEIGHBOUR_RETURN, measure={"components": [{"subgroup": "e1", "weight": 1.0, "alpha": -1.0}]})
    result = CliRunner().invoke(main, ["run", str(write_config(document))])
    assert result.exit_code == 1
    assert "/measure/components/0/alpha" in result.output


def test_cli_audit_geometry(write_config):
    document = {
        "experiment": "geometry-audit",
        "group": {"kind": "DihedralInf"},
        "measure": {"components": [
            {"subgroup": "u", "weight": 0.5, "alpha": 0.5},
            {"subgroup": "v", "weight": 0.5, "alpha": 1.5},
        ]},
        "r_range": [4, 8, 16],
    }
    result = CliRunner().invoke(main, ["audit-geometry", str(write_config(document))])
    assert result.exit_code == 0, result.output
    audit = json.loads(result.output)
    assert audit["geometry"]["volume"]["degree"] == 0.5
    assert abs(audit["naive_exponent"] - 1.0 / 1.5) < 1e-12


def test_cli_oracle_norm(write_config):
    document = {
        "experiment": "geometry-audit",
        "group": {"kind": "Heisenberg3"},
        "geometry": {"weights": {"s1": 1.0, "s2": 1.0, "s3": 1.0}},
        "r_range": [2, 4],
    }
    result = CliRunner().invoke(main, ["oracle-norm", str(write_config(document)), "--element", "0;0;4", "--cap", "3"])
    assert result.exit_code == 0, result.output
    answer = json.loads(result.output)
    assert abs(answer["oracle"] - 3.0) < 1e-9
    assert abs(answer["closed_form"] - 2.0) < 1e-9


def test_cli_oracle_norm_bad_element(write_config):
    document = {
        "experiment": "geometry-audit",
        "group": {"kind": "ZK", "k": 2},
        "geometry": {"weights": {"e1": 1.0, "e2": 2.0}},
        "r_range": [2, 4],
    }
    result = CliRunner().invoke(main, ["oracle-norm", str(write_config(document)), "--element", "1;2;3", "--cap", "2"])
    assert result.exit_code == 1
    assert "Oracle failed" in result.output
