import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hybrid_sindy import artifacts, cli
from hybrid_sindy.config import bundled_config


@pytest.fixture
def small_config(tmp_path):
    raw = yaml.safe_load(bundled_config("hopper").read_text())
    raw["data"]["train_ics"] = [[0.8, -0.1]]
    raw["data"]["validation_ics"] = [[0.84, -0.11], [0.77, -0.12]]
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def test_simulate_hopper(tmp_path):
    assert cli.main(["simulate", "--out", str(tmp_path)]) == 0
    for k in range(3):
        rows = artifacts.read_csv(tmp_path / f"train_{k}.csv")
        assert len(rows) == 152
        assert list(rows[0]) == ["traj_id", "t", "x1", "x2", "dx1", "dx2", "regime_label"]
        assert {r["traj_id"] for r in rows} == {str(k)}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    listed = {f["path"] for f in manifest["outputs"]}
    assert listed == {f"train_{k}.csv" for k in range(3)} | {f"validation_{k}.csv" for k in range(6)}
    assert {"config_hash", "seed", "version", "started", "finished"} <= set(manifest)


def test_simulate_sir(tmp_path):
    assert cli.main(["simulate", "--config", "sir", "--out", str(tmp_path)]) == 0
    data = artifacts.read_trajectories(tmp_path / "train_0.csv")
    assert data.m == 1825 and data.n == 3


def test_csv_round_trip(tmp_path):
    from hybrid_sindy.dynamics import simulate_hopper

    data = simulate_hopper((0.8, -0.1))
    back = artifacts.read_trajectories(artifacts.write_trajectories(tmp_path / "t.csv", data))
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.dX, data.dX)
    np.testing.assert_array_equal(back.times, data.times)
    np.testing.assert_array_equal(back.labels, data.labels)


def test_missing_K_exits_2(tmp_path, capsys):
    raw = yaml.safe_load(bundled_config("hopper").read_text())
    del raw["identify"]["K"]
    path = tmp_path / "noK.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert cli.main(["identify", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "identify.K" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert cli.main(["identify", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    raw = yaml.safe_load(bundled_config("hopper").read_text())
    raw["system"]["kappa"] = 1.0e30
    path = tmp_path / "stiff.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_identify_rerun_is_byte_identical(small_config, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["identify", "--config", str(small_config), "--out", str(a), "--top", "1"]) == 0
    table = capsys.readouterr().out.strip().splitlines()
    assert len(table) == 3  # header line, column line, one entry
    assert cli.main(["identify", "--config", str(small_config), "--out", str(b)]) == 0
    for name in ("catalog.json", "regime_map.csv", "scoreboard.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / "scoreboard.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["anchor_index", "model_signature"]
    assert {"k", "aicc", "rel_aicc"} <= set(header)


def test_seed_override_changes_hash(small_config, tmp_path):
    cli.main(["simulate", "--config", str(small_config), "--out", str(tmp_path / "a"), "--seed", "1"])
    cli.main(["simulate", "--config", str(small_config), "--out", str(tmp_path / "b"), "--seed", "2"])
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["seed"] == 1 and mb["seed"] == 2 and ma["config_hash"] != mb["config_hash"]
    assert (tmp_path / "a" / "train_0.csv").read_bytes() != (tmp_path / "b" / "train_0.csv").read_bytes()


def test_sweep_small(tmp_path):
    raw = yaml.safe_load(bundled_config("sweep").read_text())
    raw["sweep"]["realizations"] = 1
    path = tmp_path / "sweep.yaml"
    path.write_text(yaml.safe_dump(raw))
    assert cli.main(["sweep", "--config", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["sweep", "--config", str(path), "--out", str(tmp_path / "b")]) == 0
    rows = artifacts.read_csv(tmp_path / "a" / "sweep.csv")
    assert len(rows) == 60
    assert list(rows[0]) == ["regime", "K", "epsilon", "kappa", "kappa_eps", "success_fraction"]
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert len(artifacts.read_csv(tmp_path / "a" / "sweep_flight.csv")) == 30


@pytest.mark.slow
def test_console_entry_point_hopper(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hybrid_sindy.cli", "identify", "--out", str(tmp_path), "--top", "2"],
                          capture_output=True, text=True, check=True)
    lines = proc.stdout.strip().splitlines()
    models = {line.split(None, 4)[4] for line in lines[2:]}
    assert models == {"y'=v; v'=1", "y'=v; v'=1+y"}
