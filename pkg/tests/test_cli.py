import numpy as np
import pytest

from vvlab.cli import main
from vvlab.io import read_csv


@pytest.fixture
def run_dir(tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "--system", "heat", "--ic", "riemann(0;0.5)", "--M", "128", "--t-end", "0.5",
                 "--snapshots", "10", "--eps", "1,0.5", "--out", str(out)])
    assert code == 0
    return out


def test_check(capsys):
    assert main(["check", "--system", "burgers", "--samples", "50"]) == 0
    assert "PASS burgers" in capsys.readouterr().out


def test_simulate_layout(run_dir):
    assert (run_dir / "manifest.json").exists()
    assert len(list((run_dir / "eps_01").glob("snap_*.csv"))) == 11


def test_config_file_and_errors(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[grid]\nM = 64\ncolour = blue\n")
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "x")]) == 2
    assert "ConfigError" in capsys.readouterr().err
    ini.write_text("[system]\nname = burgers\n[grid]\nM = 64\n[run]\nt_end = 0.1\n")
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "y"), "--no-report"]) == 0
    assert not (tmp_path / "y" / "eps_00" / "report.csv").exists()


def test_gate_failure_exit_code(tmp_path, capsys):
    code = main(["simulate", "--system", "shared_frame2", "--ic", "riemann(0.19,0.19;-0.19,-0.19)",
                 "--M", "32", "--out", str(tmp_path / "z")])
    assert code == 2
    assert "HypothesisFailed" in capsys.readouterr().err


def test_decompose(run_dir, tmp_path, capsys):
    out = tmp_path / "dec.csv"
    assert main(["decompose", "--snapshot", str(run_dir / "eps_00" / "snap_0005.csv"), "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header[:2] == ["x", "v1"] and header[-1] == "recon_residual"
    assert data[:, -1].max() <= 1e-9
    assert "reconstruction residual" in capsys.readouterr().out


def test_diagnose(run_dir, tmp_path):
    assert main(["diagnose", "--run", str(run_dir)]) == 0
    assert main(["diagnose", "--run", str(run_dir), "--out", str(tmp_path / "d.csv")]) == 0
    assert (tmp_path / "d_eps_00.csv").exists() and (tmp_path / "d_eps_01.csv").exists()


def test_smoothing_and_report(run_dir, tmp_path, capsys):
    assert main(["smoothing", "--run", str(run_dir), "--k", "1"]) == 0
    assert "k=1 slope" in capsys.readouterr().out
    assert main(["report", "--run", str(run_dir), "--out", str(tmp_path / "r.csv")]) == 0
    header, data = read_csv(tmp_path / "r.csv")
    assert header[0] == "epsilon"
    np.testing.assert_array_equal(data[:, 0], [1.0, 0.5])


def test_tw(tmp_path, capsys):
    out = tmp_path / "tw.csv"
    assert main(["tw", "--system", "burgers", "--uminus", "1", "--uplus", "-1", "--M", "2001",
                 "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["xi", "u1", "du1"]
    assert "ode residual" in capsys.readouterr().out
    assert main(["tw", "--system", "burgers", "--uminus", "-1", "--uplus", "1", "--out", str(out)]) == 2


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-eps", "--system", "burgers", "--ic", "riemann(1;-1)", "--xmin", "-3", "--xmax", "3",
                 "--M", "480", "--eps", "0.4,0.2,0.1", "--t-end", "0.5", "--out", str(out)]) == 0
    header, data = read_csv(out)
    assert header == ["eps_a", "eps_b", "distance", "ratio"]
    assert data.shape == (2, 4)
    assert "profile L1 distance" in capsys.readouterr().out
    assert main(["sweep-eps", "--eps", "1,0.5,0.25", "--M", "16", "--out", str(out)]) == 2
