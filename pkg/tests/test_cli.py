import csv

import pytest

from lanechange.cli import main

SMALL = "total_gradient_steps = 300\nwarmup_transitions = 200\nsigma_anneal_steps = 200\n"


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return str(p)


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main([]) == 2
    assert main(["fly"]) == 2
    assert main(["train"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("gamma = 1.5\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.cfg:1: gamma out of range" in capsys.readouterr().err


def test_runtime_fault_exit_1(tmp_path):
    assert main(["eval", "--model", str(tmp_path / "missing.ckpt")]) == 1


def test_train_eval_cycle(tmp_path, cfg, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--config", cfg, "--seed", "11", "--out", str(out1)]) == 0
    assert main(["train", "--config", cfg, "--seed", "11", "--out", str(out2)]) == 0
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()
    assert (out1 / "model.ckpt").read_bytes() == (out2 / "model.ckpt").read_bytes()
    assert len((out1 / "metrics.csv").read_text().splitlines()) == 301

    capsys.readouterr()
    reports = []
    for name in ("e1.csv", "e2.csv"):
        assert main(["eval", "--model", str(out1 / "model.ckpt"), "--config", cfg, "--episodes", "5",
                     "--seed", "2", "--out", str(tmp_path / name)]) == 0
        reports.append(capsys.readouterr().out)
    assert reports[0] == reports[1]
    for key in ("completion_rate", "abort_rate", "timeout_rate", "mean_duration_s", "mean_abs_a_yaw",
                "max_abs_omega", "mean_R", "mean_R_acce", "mean_R_rate", "mean_R_time"):
        assert key + ":" in reports[0]
    assert (tmp_path / "e1.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()


def test_simulate_trace(tmp_path, cfg):
    trace = tmp_path / "trace.csv"
    assert main(["simulate", "--config", cfg, "--steps", "800", "--trace", str(trace), "--seed", "1"]) == 0
    with open(trace) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and list(rows[0]) == ["step", "time", "vid", "lane", "x", "y", "v", "a", "theta", "omega"]
    assert all(float(r["theta"]) == 0.0 for r in rows)


def test_gradcheck_passes(capsys):
    assert main(["gradcheck", "--trials", "1"]) == 0
    assert "FAIL" not in capsys.readouterr().out
