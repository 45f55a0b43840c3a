import csv
import json

import numpy as np
import pytest

from cute.cli import main

from test_config import SMALL


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.toml"
    p.write_text(SMALL.replace('observables = ["populations"]',
                               'observables = ["populations", "spectrum", "yields", "basis"]'))
    return p


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_run_writes_bundle(small_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(small_config), "--out", str(out), "--plot"]) == 0
    man = _manifest(out)
    assert set(man["outputs"]) >= {"populations.csv", "spectrum.csv", "basis.jsonl",
                                   "summary.json", "plot.gp"}
    assert man["config"]["name"] == "small" and man["wall_time_s"] >= 0
    rows = list(csv.DictReader(open(out / "populations.csv")))
    assert len(rows) == 201
    total = [float(r["photon"]) + float(r["fc"]) + float(r["dark"]) for r in rows]
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["dimension"] == 7
    assert 0 < summary["yields"]["M"] < 1


def test_repeat_runs_are_byte_identical(small_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(small_config), "--out", str(a)]) == 0
    assert main(["run", str(small_config), "--out", str(b)]) == 0
    assert _manifest(a)["outputs"] == _manifest(b)["outputs"]


@pytest.mark.parametrize("command, expected", [
    ("solve-vib", {"vib_M_ground.csv", "vib_M_excited.csv", "fc_M.csv"}),
    ("build", {"basis.jsonl", "hamiltonian.mtx"}),
    ("propagate", {"trajectory.csv", "populations.csv"}),
    ("spectrum", {"spectrum.csv"}),
])
def test_subcommands(small_config, tmp_path, command, expected):
    out = tmp_path / command
    assert main([command, str(small_config), "--out", str(out)]) == 0
    assert expected <= set(_manifest(out)["outputs"])


def test_validate_exit_codes(small_config, tmp_path, capsys):
    assert main(["validate", str(small_config)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dimension"] == 7 and report["ok"]
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL.replace("g = 0.01\n", ""))
    assert main(["validate", str(bad)]) == 2
    assert "coupling" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("schema_version = [\n")
    assert main(["run", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2


def test_numeric_failure_exit_code(tmp_path, capsys):
    text = SMALL.replace("n_points = 128, q_min = -8.0, q_max = 10.0",
                         "n_points = 32, q_min = -1.0, q_max = 1.0")
    p = tmp_path / "coarse.toml"
    p.write_text(text)
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "[vibsolver]" in capsys.readouterr().err


def test_oracle_compare(small_config, tmp_path, capsys):
    text = small_config.read_text().replace("m_e = 6", "m_g = 2\nm_e = 2")
    small_config.write_text(text)
    out = tmp_path / "oc"
    assert main(["oracle-compare", str(small_config), "--out", str(out),
                 "--n-molecules", "3", "--t-max-fs", "200", "--n-steps", "21"]) == 0
    report = json.loads((out / "oracle_report.json").read_text())
    assert report["max_distance"] < 1e-10


def test_rates_command(tmp_path):
    cfg = tmp_path / "r.toml"
    cfg.write_text('schema_version = 1\n[rates]\nN = [4]\nG = 0.1\nJ0 = 0.0012732395447351627\n'
                   'eta = 0.0\nsimulate = false\n')
    out = tmp_path / "r"
    assert main(["rates", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "rates.csv")))
    assert len(rows) == 6
    assert all(r["fitted_per_fs"] == "" for r in rows)
