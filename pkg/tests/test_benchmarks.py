"""Benchmark plumbing: configs, builders, serialization and the CLI."""

import json
import os

import numpy as np
import pytest

from ancf14.benchmarks import BenchmarkConfig, run_benchmark
from ancf14.benchmarks.buckling import build_mechanism
from ancf14.benchmarks.princeton import build_blade
from ancf14.benchmarks.shaft import (angular_velocity, build_shaft,
                                     drive_angle)
from ancf14.benchmarks.spring import build_spring
from ancf14.cli import main
from ancf14.errors import ModelError
from ancf14.model import constraint_eval
from ancf14.reporting import (ResultSeries, read_csv, summary_dict,
                              validate_summary, write_csv)


def test_config_rejects_unknown_benchmark():
    with pytest.raises(ModelError):
        BenchmarkConfig(name="pendulum")


def test_config_from_json_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"benchmark": "spring", "n_elements": 5,
                                "deformation_mode": "small",
                                "disable_torsion": True}))
    cfg = BenchmarkConfig.from_json(str(path))
    assert cfg.name == "spring"
    assert cfg.n_elements == 5
    assert cfg.deformation == "small"
    assert cfg.no_torsion


def test_config_from_json_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"benchmark": "spring", "dt": 0.1}))
    with pytest.raises(ModelError, match="unknown config keys"):
        BenchmarkConfig.from_json(str(path))


@pytest.mark.parametrize("build", [
    lambda: build_spring(4)[:2],
    lambda: build_blade(3, np.deg2rad(30.0))[:2],
    lambda: build_shaft(4, angle=lambda t: 0.0)[:2],
    lambda: build_mechanism(4)[:2],
])
def test_builders_start_on_the_constraints(build):
    model, state = build()
    g, _ = constraint_eval(model, state.q, 0.0, state.directors)
    assert np.max(np.abs(g)) < 1e-9


def test_shaft_drive_angle_integrates_speed():
    ts = np.linspace(0.0, 2.5, 2501)
    speeds = np.array([angular_velocity(t) for t in ts])
    angles = np.array([drive_angle(t) for t in ts])
    integral = np.concatenate(
        [[0.0], np.cumsum(0.5 * (speeds[1:] + speeds[:-1]) * np.diff(ts))])
    assert np.max(np.abs(angles - integral)) < 1e-3


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(7)
    data = rng.standard_normal((40, 3)).astype(float)
    data[:, 0] = np.sort(data[:, 0])
    series = ResultSeries(name="s", columns=["x", "a", "b"], data=data)
    path = str(tmp_path / "s.csv")
    write_csv(series, path)
    back = read_csv(path)
    assert back.columns == series.columns
    assert np.array_equal(back.data, series.data)
    with open(path, "rb") as fh:
        raw = fh.read()
    assert b"\r" not in raw


def test_empty_series_writes_header_only(tmp_path):
    series = ResultSeries(name="empty", columns=["t", "y"])
    path = str(tmp_path / "empty.csv")
    write_csv(series, path)
    with open(path) as fh:
        assert fh.read() == "t,y\n"
    back = read_csv(path)
    assert back.data.shape == (0, 2)


def test_summary_schema_validation(tmp_path):
    cfg = BenchmarkConfig(name="spring", n_elements=3, load_steps=2)
    result = run_benchmark(cfg)
    summary = summary_dict(result)
    validate_summary(summary)
    summary["extra"] = 1
    with pytest.raises(Exception):
        validate_summary(summary)


def test_cli_is_deterministic(tmp_path):
    outs = []
    for label in ("a", "b"):
        out = tmp_path / label
        code = main(["run", "spring", "--elements", "3",
                     "--out", str(out)])
        assert code in (0, 2)
        outs.append(out)
    names = sorted(os.listdir(outs[0]))
    assert names == sorted(os.listdir(outs[1]))
    assert any(n.endswith(".csv") for n in names)
    assert any(n.endswith(".png") for n in names)
    assert any(n == "summary.json" for n in names)
    for name in names:
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, name


def test_cli_rejects_bad_target(capsys):
    assert main(["run", "no_such_benchmark"]) == 1
    assert "error:" in capsys.readouterr().err
