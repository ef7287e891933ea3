import subprocess
import sys

import pytest

from nonlocal_patterns.cli import main

CONFIG = """\
grid: {dimension: 1, extent: 15.0, points: 120}
kernel: {family: K1}
response: {kind: saturation, b: 2.0}
dt: 0.1
stationarity_tol: 1.0e-8
initial_condition: {kind: step}
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(CONFIG)
    return path


def test_run_writes_artifacts(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "run", str(config)]) == 0
    assert "stationary=True" in capsys.readouterr().out
    for name in ("field.csv", "field.pgm", "report.json"):
        assert (out / name).exists()


def test_run_is_deterministic(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(CONFIG.replace("{kind: step}", "{kind: random, seed: 1, amplitude: 0.5}"))
    for d in ("a", "b"):
        assert main(["--seed", "9", "--threads", "1", "--out-dir", str(tmp_path / d), "run", str(cfg)]) == 0
    assert (tmp_path / "a" / "field.csv").read_bytes() == (tmp_path / "b" / "field.csv").read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(CONFIG.replace("dt: 0.1", "dt: -1"))
    assert main(["--out-dir", str(tmp_path), "run", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "bad.yaml:4: key 'dt'" in err


def test_missing_config_is_io_error(tmp_path):
    assert main(["--out-dir", str(tmp_path), "run", str(tmp_path / "missing.yaml")]) == 4


def test_unwritable_out_dir_is_io_error(config, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--out-dir", str(blocker / "sub"), "run", str(config)]) == 4


def test_blow_up_exit_code(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(CONFIG.replace("kind: saturation, b: 2.0", "kind: linear, b: 1.0e6").replace("dt: 0.1", "dt: 0.5"))
    with pytest.warns(RuntimeWarning):
        assert main(["--out-dir", str(tmp_path), "run", str(cfg)]) == 3


def test_unknown_preset_exit_code(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "preset", "nope"]) == 2


def test_preset_list(capsys):
    assert main(["preset", "--list"]) == 0
    assert "linear-1d-K3" in capsys.readouterr().out


def test_spectrum(config, tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "spectrum", str(config), "--modes", "5"]) == 0
    rows = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "index,eigenvalue" and len(rows) == 6
    assert "b_critical=" in capsys.readouterr().out


def test_check_kernel(config, tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "check-kernel", str(config), "Positive1"]) == 0
    assert "Positive1: not applicable" in capsys.readouterr().out
    assert (tmp_path / "lemma.csv").exists()


def test_scan(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(CONFIG.replace("extent: 15.0, points: 120", "extent: 5.0, points: 101"))
    args = ["--out-dir", str(tmp_path), "scan", str(cfg), "--b-range", "0.9", "1.1", "--points", "3", "--relative"]
    assert main(args) == 0
    rows = (tmp_path / "branch.csv").read_text().splitlines()
    assert rows[0] == "b,amplitude,residual,accepted" and len(rows) == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nonlocal_patterns", "preset", "--list"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "schauder-1d-K1" in proc.stdout
