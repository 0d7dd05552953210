import json

import pytest

from cdde_bound.cli import main

from conftest import SAMPLE_PROBLEM


def write_problem(tmp_path, mutate=None, name="problem.json"):
    doc = json.loads(SAMPLE_PROBLEM.read_text())
    if mutate:
        mutate(doc)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_check_sample_passes(capsys, sample_problem_path):
    code = main(["check", str(sample_problem_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("PASS") == 4
    assert "FAIL" not in out


def test_check_identity_d_fails(tmp_path, capsys):
    path = write_problem(tmp_path, lambda d: d["system"].update(
        D=[[1.0, 0.0], [0.0, 1.0]]))
    code = main(["check", str(path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL D is Schur" in out


def test_check_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["check", str(path)]) == 2
    assert "input error" in capsys.readouterr().err


def test_check_missing_field_exits_2(tmp_path, capsys):
    path = write_problem(tmp_path, lambda d: d["system"].pop("h_max"))
    assert main(["check", str(path)]) == 2


def test_check_bad_dimensions_exit_2(tmp_path):
    path = write_problem(tmp_path, lambda d: d["system"].update(
        psi_bar=[1.0, 2.0]))
    assert main(["check", str(path)]) == 2


def test_bound_writes_outputs(tmp_path, capsys, sample_problem_path):
    out = tmp_path / "out"
    code = main(["bound", str(sample_problem_path), "--out", str(out),
                 "--t-end", "4", "--step", "0.01"])
    assert code == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["T_star"] == 2.0
    assert cert["mu"] == pytest.approx(0.999 * 0.0707, abs=5e-4)
    assert cert["eta"] == pytest.approx([0.7249, 1.4756, 0.5780], abs=5e-4)
    lines = (out / "staircase.csv").read_text().splitlines()
    assert lines[0] == "t,xb_1,xb_2,xb_3,yb_1,yb_2"
    assert len(lines) == 402
    stdout = capsys.readouterr().out
    assert "T_star" in stdout


def test_bound_deterministic_bytes(tmp_path, sample_problem_path):
    outs = []
    for name in ("o1", "o2"):
        out = tmp_path / name
        assert main(["bound", str(sample_problem_path), "--out", str(out),
                     "--t-end", "4", "--step", "0.01"]) == 0
        outs.append(((out / "certificate.json").read_bytes(),
                     (out / "staircase.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_bound_short_circuit_flag(tmp_path, sample_problem_path):
    def shrink(doc):
        doc["system"]["psi_bar"] = [0.07, 0.14, 0.05]
        doc["system"]["phi_bar"] = [0.37, 0.11]
    path = write_problem(tmp_path, shrink)
    out = tmp_path / "out"
    assert main(["bound", str(path), "--out", str(out),
                 "--t-end", "1", "--step", "0.01"]) == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["constant_bound"] is True


def test_bound_alpha_step_refinement(tmp_path, sample_problem_path):
    ts = []
    for name, astep in (("c", "0.001"), ("f", "0.0005")):
        out = tmp_path / name
        assert main(["bound", str(sample_problem_path), "--out", str(out),
                     "--alpha-step", astep, "--t-end", "1", "--step", "0.01"]) == 0
        ts.append(json.loads((out / "certificate.json").read_text())["T"])
    assert abs(ts[0] - 1.2056) <= 0.05
    assert abs(ts[1] - 1.2056) <= 0.05


def test_simulate_full_horizon_row_count(tmp_path, sample_problem_path):
    out = tmp_path / "traj.csv"
    code = main(["simulate", str(sample_problem_path), "--a", "1", "--b", "1",
                 "--out", str(out)])          # defaults: t_end 40, step 1e-3
    assert code == 0
    with open(out) as fh:
        rows = sum(1 for _ in fh) - 1
    assert rows == 40001


def test_cli_entrypoint_help():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "cdde_bound", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "check" in proc.stdout and "verify" in proc.stdout


def test_simulate_row_count_and_grid(tmp_path, capsys, sample_problem_path):
    out = tmp_path / "traj.csv"
    code = main(["simulate", str(sample_problem_path), "--a", "1", "--b", "1",
                 "--t-end", "1", "--step", "0.001", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x_1,x_2,x_3,y_1,y_2"
    assert len(lines) == 1002          # header + t_end/step + 1 samples


def test_simulate_zero_scenario_all_zero(tmp_path, sample_problem_path):
    def zero_init(doc):
        doc["scenario"]["psi"] = [0.0, 0.0, 0.0]
        doc["scenario"]["phi"] = [0.0, 0.0]
    path = write_problem(tmp_path, zero_init)
    out = tmp_path / "traj.csv"
    assert main(["simulate", str(path), "--a", "0", "--b", "0",
                 "--t-end", "0.5", "--step", "0.001", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    for row in rows[:: 100]:
        vals = [float(tok) for tok in row.split(",")][1:]
        assert all(v == 0.0 for v in vals)


def test_simulate_deterministic_bytes(tmp_path, sample_problem_path):
    outs = []
    for name in ("t1.csv", "t2.csv"):
        out = tmp_path / name
        assert main(["simulate", str(sample_problem_path),
                     "--t-end", "0.5", "--step", "0.001", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_inadmissible_scale_fails(tmp_path, capsys, sample_problem_path):
    out = tmp_path / "traj.csv"
    code = main(["simulate", str(sample_problem_path), "--a", "2",
                 "--t-end", "10", "--step", "0.002", "--out", str(out)])
    assert code == 1
    assert "scenario" in capsys.readouterr().err


def test_verify_single_combo(tmp_path, capsys, sample_problem_path):
    code = main(["verify", str(sample_problem_path), "--a", "1", "--b", "1",
                 "--t-end", "4", "--step", "0.002"])
    out = capsys.readouterr().out
    assert code == 0
    assert "OK" in out and "VIOLATION" not in out


def test_verify_rejects_scenario_exceeding_certified_envelope(tmp_path, capsys):
    # certificate computed for a smaller omega_bar than the scenario drives:
    # the admissibility check names the first offending time and exits nonzero
    def shrink_bounds(doc):
        doc["system"]["omega_bar"] = [0.05, 0.03, 0.01]
    path = write_problem(tmp_path, shrink_bounds)
    code = main(["verify", str(path), "--a", "1", "--b", "1",
                 "--t-end", "10", "--step", "0.002"])
    assert code == 1
    assert "at t=" in capsys.readouterr().err


def test_verify_grid_runs_all_six(capsys, sample_problem_path):
    code = main(["verify", str(sample_problem_path),
                 "--t-end", "2", "--step", "0.004"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("-> OK") == 6


def test_verify_threaded_output_identical(capsys, monkeypatch, sample_problem_path):
    args = ["verify", str(sample_problem_path), "--t-end", "2", "--step", "0.004"]
    assert main(args) == 0
    sequential = capsys.readouterr().out
    monkeypatch.setenv("CDDE_BOUND_THREADS", "3")
    assert main(args) == 0
    threaded = capsys.readouterr().out
    assert threaded == sequential
