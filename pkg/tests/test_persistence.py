import numpy as np
import pytest

from lanechange import CheckpointError, QuadraticQ, export_metrics, greedy_action, load_checkpoint, read_metrics, save_checkpoint
from lanechange.training import METRICS_HEADER, MetricsRow


def test_metrics_csv(tmp_path):
    rows = [MetricsRow(i, 3, 0.1 / i, -1.0, -0.5, -0.25, -0.25, 0.1, 0, 1, 2) for i in range(1, 6)]
    path = tmp_path / "metrics.csv"
    export_metrics(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,episode_id,loss,r,r_acce,r_rate,r_time,sigma,episodes_done,episodes_aborted,episodes_timeout"
    assert tuple(lines[0].split(",")) == METRICS_HEADER
    assert len(lines) == len(rows) + 1
    assert read_metrics(path)[1]["loss"] == 0.05


def test_checkpoint_round_trip_exact(tmp_path, rng):
    q = QuadraticQ.initialize(rng)
    path = tmp_path / "m.ckpt"
    save_checkpoint(q, path, {"seed": 1, "step": 10})
    loaded, meta = load_checkpoint(path, expect_architecture=q.architecture())
    assert meta == {"seed": "1", "step": "10"}
    for name in q.nets:
        assert np.array_equal(loaded.nets[name].flat(), q.nets[name].flat())
    s = rng.uniform(-1, 1, (1000, 8))
    assert np.array_equal(greedy_action(loaded, s), greedy_action(q, s))


def test_truncated_checkpoint_rejected(tmp_path, rng):
    q = QuadraticQ.initialize(rng)
    path = tmp_path / "m.ckpt"
    save_checkpoint(q, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-100]) + "\n")
    with pytest.raises(CheckpointError, match="parameters"):
        load_checkpoint(path)


def test_architecture_mismatch_rejected(tmp_path, rng):
    path = tmp_path / "m.ckpt"
    save_checkpoint(QuadraticQ.initialize(rng, hidden_ac=10, hidden_b=10), path)
    with pytest.raises(CheckpointError, match="architecture"):
        load_checkpoint(path, expect_architecture=QuadraticQ.initialize(rng).architecture())
    (tmp_path / "junk").write_text("hello\n")
    with pytest.raises(CheckpointError, match="not a checkpoint"):
        load_checkpoint(tmp_path / "junk")
