import json
import subprocess
import sys

import pytest

from kickedtn.cli import main
from kickedtn.experiments import ensembles as ens
from kickedtn.experiments.io import read_csv


def test_oracle_subcommand(tmp_path, capsys):
    assert main(["oracle", "--L", "2,3", "--out-dir", str(tmp_path)]) == 0
    assert "max_rel_err" in capsys.readouterr().out
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "ok"


@pytest.mark.parametrize("argv", [
    ["oracle", "--L", "1"],
    ["spectrum", "--h-I", ""],
    ["evolve", "--sector", "1,even", "--L", "6"],
    ["frobnicate"],
    ["oracle", "--boundary", "twisted"],
])
def test_validation_errors_exit_1(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv + ["--out-dir", str(tmp_path)] if argv[0] != "frobnicate" else argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_partial_failure_exit_2(tmp_path, monkeypatch, capsys):
    def broken(*a, **k):
        raise FloatingPointError("injected")

    monkeypatch.setattr(ens, "entropy_point", broken)
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nkind = entropy_sweep\n[sweep]\nL = 6\nh_I = 0.2\nt = 2\n"
                   "[ensemble]\nn_samples = 2\n")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "out")]) == 2
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["status"] == "partial"


def test_run_config_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nkind = spectrum_gap\n[sweep]\nL = 6 8\nh_I = 0.3 0.5\n")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path / "out"), "--seed", "3"]) == 0
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["config"]["seed"] == 3


def test_spectrum_and_plot(tmp_path, capsys):
    out = tmp_path / "spec"
    assert main(["spectrum", "--L", "6", "--h-I", "0.3", "--out-dir", str(out)]) == 0
    cols, rows = read_csv(out / "eigenvalues.csv")
    assert {"re", "im", "rho", "phi"} <= set(cols) and rows
    assert main(["plot", str(out / "eigenvalues.csv"), "--x", "re", "--y", "im",
                 "--out", str(tmp_path / "p.svg")]) == 0
    assert (tmp_path / "p.svg").read_text().startswith("<svg")


def test_evolve_open_boundary(tmp_path, capsys):
    assert main(["evolve", "--L", "6", "--h-I", "0.3", "--t", "4", "--boundary", "obc",
                 "--out-dir", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "trajectory_L6_hI0.3.csv")
    assert len(rows) == 5


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kickedtn.cli", "oracle", "--L", "2",
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
