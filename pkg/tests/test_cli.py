import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from threshold_rem.cli import main, parse_config_text, UsageError


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "runs")])


def only_dir(tmp_path, prefix):
    dirs = sorted((tmp_path / "runs").glob(prefix + "*"))
    assert dirs, prefix
    return dirs


def test_phase_diagram(tmp_path, capsys):
    assert run(tmp_path, "phase-diagram", "--P", "2", "--N0", "2", "--beta-max", "3", "--R-max", "2") == 0
    (d,) = only_dir(tmp_path, "phase-diagram-")
    rows = list(csv.reader(io.StringIO((d / "phase_single.csv").read_text())))
    assert rows[0] == ["beta", "R", "psi", "branch"]
    assert len(rows) == 1 + 200 * 200
    curves = list(csv.reader(io.StringIO((d / "boundaries_single.csv").read_text())))
    assert curves[0] == ["curve", "beta", "R"]
    assert {r[0] for r in curves[1:]} == {"ordered-glassy", "ordered-paramagnetic", "glassy-paramagnetic"}
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and all(line.startswith("wrote ") for line in out)
    manifest = json.loads((d / "manifest.json").read_text())
    assert {"timestamp", "version", "resolved", "seed"} <= set(manifest)


def test_phase_diagram_joint_and_mismatch(tmp_path):
    assert run(tmp_path, "phase-diagram-joint", "--alpha-min", "0.5", "--alpha-max", "2",
               "--loose-alpha", "--n", "20") == 0
    assert run(tmp_path, "mismatch", "--rho", "0.5") == 0
    (d,) = only_dir(tmp_path, "mismatch-")
    tp = json.loads((d / "mismatch.json").read_text())["triple_point"]
    assert tp == {"R": 0.25, "beta": 0.5}


def test_slepian_check(tmp_path, capsys):
    assert run(tmp_path, "slepian", "--check") == 0
    out = capsys.readouterr().out
    assert "normalization residual" in out and "derivative residual" in out


def test_slepian_ks_writes_table(tmp_path):
    assert run(tmp_path, "slepian", "--trials", "500", "--G", "32") == 0
    (d,) = only_dir(tmp_path, "slepian-")
    assert (d / "slepian_table.bin").stat().st_size > 8 * 10000
    assert json.loads((d / "slepian_ks.json").read_text())["under_resolved"] is True


def test_psi_and_simulate(tmp_path):
    assert run(tmp_path, "psi", "--beta", "1", "--R", "0.5", "0.9") == 0
    (d,) = only_dir(tmp_path, "psi-")
    rows = list(csv.reader(io.StringIO((d / "psi.csv").read_text())))
    assert rows[1][:4] == ["1", "0.5", "2", "ordered"]
    assert run(tmp_path, "simulate", "--T", "6", "--R", "0.5", "--M", "0.3", "--trials", "10",
               "--mode", "exact", "--G", "8") == 0
    (d,) = only_dir(tmp_path, "simulate-")
    head = (d / "trials.csv").read_text().splitlines()[0]
    assert head == "trial_index,seed,m_hat,alpha_hat,sq_error,anomalous"
    assert json.loads((d / "summary.json").read_text())["n_trials"] == 10


def test_sweep_threshold_rerun_byte_identical(tmp_path):
    cfg = tmp_path / "thr.cfg"
    cfg.write_text("P = 2\nN0 = 2\nM = 0.4\nR = 0.3, 0.9, 1.5\nT = 10\n")
    args = ["sweep-threshold", "--config", str(cfg), "--trials", "200", "--seed", "7"]
    assert run(tmp_path, *args) == 0
    assert run(tmp_path, *args) == 0
    first, second = only_dir(tmp_path, "sweep-threshold-")
    assert second.name == first.name + "-1"  # never overwrites
    a = (first / "sweep_threshold.json").read_bytes()
    assert a == (second / "sweep_threshold.json").read_bytes()
    assert json.loads(a)["spec"]["trials"] == 200


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"R": [0.5], "beta": [1.0], "T": 10}))
    assert run(tmp_path, "psi", "--config", str(cfg), "--R", "0.9", "--label", "x") == 0
    m = json.loads((tmp_path / "runs" / "x" / "manifest.json").read_text())
    assert m["resolved"]["R"] == [0.9]


def test_sweep_psi_with_plot_data(tmp_path):
    assert run(tmp_path, "sweep-psi", "--beta", "0.5", "--R", "0.5", "--T", "3", "4",
               "--M", "0.3", "--trials", "3", "--emit-plot-data", "--label", "s") == 0
    names = sorted(p.name for p in (tmp_path / "runs" / "s").iterdir())
    assert "sweep_psi_long.csv" in names and "manifest.json" in names


def test_bounds(tmp_path):
    assert run(tmp_path, "bounds", "--R", "0.1", "2", "--T", "40", "--label", "b") == 0
    rep = json.loads((tmp_path / "runs" / "b" / "compare_bounds.json").read_text())
    assert len(rep["cells"]) == 2


def test_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "bogus") == 2
    assert run(tmp_path, "psi", "--bogus", "1") == 2
    assert "--bogus" in capsys.readouterr().err
    assert run(tmp_path, "psi", "--mode", "fast") == 2
    assert run(tmp_path, "psi", "--config", str(tmp_path / "missing.cfg")) == 2
    assert main([]) == 2


def test_domain_error_exit_code(tmp_path, capsys):
    assert run(tmp_path, "psi", "--M", "0.7") == 1
    assert "M must lie in (0, 1/2)" in capsys.readouterr().err
    assert run(tmp_path, "simulate", "--mode", "exact", "--R", "1.5", "--T", "10") == 1
    # failed runs leave no empty directories behind
    assert not list((tmp_path / "runs").glob("*"))


def test_config_parser():
    conf = parse_config_text("R = 0.3, 0.6  # rates\ntrials = 5\nmode = exact\n")
    assert conf == {"R": [0.3, 0.6], "trials": 5, "mode": "exact"}
    with pytest.raises(UsageError):
        parse_config_text("colour = red\n")
    with pytest.raises(UsageError):
        parse_config_text("trials = 1, 2\n")


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "threshold_rem.cli", "psi", "--out",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and "psi.csv" in proc.stdout
