import subprocess
import sys

import numpy as np
import pytest

from phdae.cli import TRAJECTORY_COLUMNS, main

SWING = "[initial]\nq = -1.0707963267948966, 0.3\n"


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def load_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, comments="#", ndmin=2)


def test_simulate_row_count(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 30\n[output]\nlog_every = 3\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 1 + 30 // 3 + 1
    assert (tmp_path / "o" / "report.txt").read_text().startswith("simulate\n")


def test_csv_format(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 5\n")
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
    raw = (tmp_path / "o" / "trajectory.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n") and not raw.endswith(b"\n\n")
    header, first, second = raw.decode().splitlines()[:3]
    assert header.split(",") == TRAJECTORY_COLUMNS
    assert len(first.split(",")) == len(TRAJECTORY_COLUMNS)
    # 17 significant digits round-trip every double
    field = second.split(",")[1]
    assert len(field.lstrip("-").replace(".", "").lstrip("0")) >= 16
    assert second.split(",")[-1] in {"1", "2", "3", "4"}


def test_determinism(tmp_path):
    cfg = write(tmp_path, SWING + "[control]\nmode = damping\ngain = 0.3\n[experiment]\nsteps = 100\n")
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_open_loop_replay(tmp_path):
    cfg = write(tmp_path, SWING + "[control]\nmode = damping\ngain = 0.3\n[experiment]\nsteps = 100\n")
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    replay = write(tmp_path, SWING + "[control]\nmode = open_loop\ninput = a/trajectory.csv\n"
                   "[experiment]\nsteps = 100\n", "replay.cfg")
    assert main(["simulate", "--config", replay, "--out", str(tmp_path / "b")]) == 0
    a, b = load_csv(tmp_path / "a" / "trajectory.csv"), load_csv(tmp_path / "b" / "trajectory.csv")
    assert np.max(np.abs(a - b)) <= 1e-12


def test_order_study(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nT = 0.5\nh_list = 0.01, 0.005, 0.0025\n")
    assert main(["order-study", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "study.csv").read_text().splitlines()
    assert lines[0] == "h,steps,global_error,observed_order"
    assert len(lines) == 4
    orders = [float(line.split(",")[3]) for line in lines[2:]]
    assert all(1.8 <= q <= 2.2 for q in orders)


def test_order_study_rejects_feedback(tmp_path, capsys):
    cfg = write(tmp_path, "[control]\nmode = damping\ngain = 0.3\n")
    assert main(["order-study", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "order-study" in capsys.readouterr().err


def test_energy_study(tmp_path):
    cfg = write(tmp_path, SWING + "[integrator]\nh = 0.004\n[experiment]\nsteps = 250\n")
    assert main(["energy-study", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    report = dict(line.split(" = ") for line in
                  (tmp_path / "o" / "report.txt").read_text().splitlines()[1:])
    assert 3 <= float(report["deviation_ratio"]) <= 5


def test_symmetry_check(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 100\n")
    assert main(["symmetry-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "result = pass" in (tmp_path / "o" / "report.txt").read_text()


def test_symmetry_check_failure_exit(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 100\nthreshold = 0\n")
    assert main(["symmetry-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_dissipation_check(tmp_path):
    cfg = write(tmp_path, SWING + "[control]\nmode = damping\ngain = 0.3\n"
                "[experiment]\nsteps = 300\n")
    assert main(["dissipation-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_dissipation_check_without_damping(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 300\n")
    assert main(["dissipation-check", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "first_increase_step" in (tmp_path / "o" / "report.txt").read_text()


def test_validate_config(tmp_path, capsys):
    cfg = write(tmp_path, SWING)
    assert main(["validate-config", "--config", cfg]) == 0
    assert "config ok" in capsys.readouterr().out
    assert not (tmp_path / "out").exists()


def test_config_error_exit(tmp_path, capsys):
    cfg = write(tmp_path, "[integrator]\nh = 0\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_off_manifold_raw_state(tmp_path):
    cfg = write(tmp_path, "[initial]\nr = 0, -0.7, 0, -0.9\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_solver_failure_writes_partial_csv(tmp_path, capsys):
    cfg = write(tmp_path, "[integrator]\nh = 0.3\nmax_iter = 1\n"
                "[initial]\nq = 0.5, 2\np_hat = 3, 1\n[experiment]\nsteps = 100\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    text = (tmp_path / "o" / "trajectory.csv").read_text()
    assert text.splitlines()[-1].startswith("# FAILURE:")
    assert len(load_csv(tmp_path / "o" / "trajectory.csv")) >= 1
    assert "solver failure" in capsys.readouterr().err


def test_command_overrides_config_mode(tmp_path, capsys):
    cfg = write(tmp_path, SWING + "[experiment]\nmode = energy_study\nsteps = 10\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "overrides" in capsys.readouterr().err
    assert (tmp_path / "o" / "report.txt").read_text().startswith("simulate")


def test_output_path_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 3\n[output]\npath = results\n")
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "results" / "trajectory.csv").exists()


def test_unknown_command(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["fly", "--config", "x"])
    assert info.value.code == 2


def test_console_script(tmp_path):
    cfg = write(tmp_path, SWING + "[experiment]\nsteps = 3\n")
    out = subprocess.run([sys.executable, "-m", "phdae.cli", "validate-config", "--config", cfg],
                         capture_output=True, text=True)
    assert out.returncode == 0
