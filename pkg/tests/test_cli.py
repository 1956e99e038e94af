"""End-to-end checks of the command-line interface, run in process."""

import csv
import hashlib
import json
import os

import numpy as np
import pytest

from gridmodes import cli
from gridmodes.simulator import SwingNetwork, write_network
from gridmodes.trajectory import (
    ChannelSchema,
    Trajectory,
    TrajectorySet,
    load_trajectory,
    load_trajectory_set,
    write_trajectory,
    write_trajectory_set,
)


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture
def network_file(two_machine, tmp_path):
    path = str(tmp_path / "net.json")
    write_network(two_machine, path)
    return path


@pytest.fixture
def spiral_manifest(spiral_set, tmp_path):
    # two runs of the same linear system from different initial states
    tset, a = spiral_set
    first = tset.trajectories[0]
    values = np.empty_like(first.values)
    values[:, 0] = [0.3, -0.8]
    for k in range(values.shape[1] - 1):
        values[:, k + 1] = a @ values[:, k]
    second = Trajectory(tset.schema, tset.dt, 0.0, values)
    both = TrajectorySet((first, second))
    out = str(tmp_path / "train")
    return write_trajectory_set(both, out)


class TestSimulate:
    def test_fault_run(self, network_file, tmp_path):
        out = str(tmp_path / "traj.csv")
        rc = cli.main(["simulate", "--network", network_file,
                       "--fault-bus", "1", "--fault-mag", "0.1",
                       "--horizon", "2.0", "--out", out])
        assert rc == 0
        traj = load_trajectory(out, fault_time=1.0)
        assert traj.schema.names() == ["omega_1", "delta_1", "omega_2", "delta_2"]
        assert traj.n_samples == 201
        assert traj.dt == pytest.approx(0.01)

    def test_free_run_without_fault_bus(self, network_file, tmp_path):
        out = str(tmp_path / "free.csv")
        rc = cli.main(["simulate", "--network", network_file,
                       "--horizon", "1.0", "--out", out])
        assert rc == 0
        traj = load_trajectory(out)
        # starting at equilibrium the free run stays flat
        assert np.allclose(traj.values, traj.values[:, :1], atol=1e-9)

    def test_instability_exit_code(self, network_file, tmp_path):
        rc = cli.main(["simulate", "--network", network_file,
                       "--fault-bus", "1", "--fault-mag", "50.0",
                       "--fault-dur", "1.0", "--horizon", "3.0",
                       "--out", str(tmp_path / "x.csv")])
        assert rc == 3

    def test_missing_network_file(self, tmp_path):
        rc = cli.main(["simulate", "--network", str(tmp_path / "nope.json"),
                       "--horizon", "1.0", "--out", str(tmp_path / "x.csv")])
        assert rc == 2


class TestScenarios:
    def test_one_trajectory_per_bus(self, network_file, tmp_path):
        out = str(tmp_path / "runs")
        rc = cli.main(["scenarios", "--network", network_file,
                       "--buses", "1,2", "--fault-mag", "0.1",
                       "--horizon", "2.0", "--out", out])
        assert rc == 0
        tset = load_trajectory_set(os.path.join(out, "manifest.json"))
        assert len(tset) == 2
        assert all(tr.fault_time == 1.0 for tr in tset)

    def test_range_syntax(self, network_file, tmp_path):
        out = str(tmp_path / "runs")
        rc = cli.main(["scenarios", "--network", network_file,
                       "--buses", "1:2", "--fault-mag", "0.1",
                       "--horizon", "2.0", "--out", out])
        assert rc == 0
        assert len(load_trajectory_set(os.path.join(out, "manifest.json"))) == 2

    def test_malformed_bus_list(self, network_file, tmp_path):
        for bad in ("1,,2", "2:1", "1,abc"):
            rc = cli.main(["scenarios", "--network", network_file,
                           "--buses", bad, "--horizon", "2.0",
                           "--out", str(tmp_path / "runs")])
            assert rc == 1


class TestFitPredict:
    def test_pipeline_on_linear_data(self, spiral_manifest, tmp_path):
        model_path = str(tmp_path / "model.json")
        rc = cli.main(["fit", "--train", spiral_manifest, "--d", "3",
                       "--model", model_path])
        assert rc == 0

        train_dir = os.path.dirname(spiral_manifest)
        init = os.path.join(train_dir, "trajectory_000.csv")
        pred_path = str(tmp_path / "pred.csv")
        metrics_path = str(tmp_path / "metrics.json")
        rc = cli.main(["predict", "--model", model_path, "--init", init,
                       "--reference", init, "--metrics", metrics_path,
                       "--out", pred_path])
        assert rc == 0

        with open(metrics_path) as fh:
            metrics = json.load(fh)
        assert metrics["d"] == 3
        assert set(metrics) == {"d", "r", "steps", "rrmse"}
        assert metrics["rrmse"] < 1e-8

        pred = load_trajectory(pred_path)
        ref = load_trajectory(init)
        assert pred.t0 == pytest.approx(ref.t0 + 2 * ref.dt)
        assert pred.n_samples == metrics["steps"]

    def test_forecast_with_explicit_steps(self, spiral_manifest, tmp_path):
        model_path = str(tmp_path / "model.json")
        assert cli.main(["fit", "--train", spiral_manifest, "--d", "2",
                         "--model", model_path]) == 0
        init = os.path.join(os.path.dirname(spiral_manifest),
                            "trajectory_000.csv")
        out = str(tmp_path / "fc.csv")
        rc = cli.main(["predict", "--model", model_path, "--init", init,
                       "--steps", "50", "--out", out])
        assert rc == 0
        assert load_trajectory(out).n_samples == 50

    def test_predict_usage_errors(self, spiral_manifest, tmp_path):
        model_path = str(tmp_path / "model.json")
        assert cli.main(["fit", "--train", spiral_manifest, "--d", "2",
                         "--model", model_path]) == 0
        init = os.path.join(os.path.dirname(spiral_manifest),
                            "trajectory_000.csv")
        # metrics without a reference
        assert cli.main(["predict", "--model", model_path, "--init", init,
                         "--metrics", str(tmp_path / "m.json"),
                         "--out", str(tmp_path / "p.csv")]) == 1
        # neither steps nor reference
        assert cli.main(["predict", "--model", model_path, "--init", init,
                         "--out", str(tmp_path / "p.csv")]) == 1

    def test_fit_idempotent(self, spiral_manifest, tmp_path):
        p1, p2 = str(tmp_path / "m1.json"), str(tmp_path / "m2.json")
        for path in (p1, p2):
            assert cli.main(["fit", "--train", spiral_manifest, "--d", "3",
                             "--model", path]) == 0
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_rank_flags_mutually_exclusive(self, spiral_manifest, tmp_path):
        rc = cli.main(["fit", "--train", spiral_manifest, "--d", "2",
                       "--rank", "2", "--rank-tol", "1e-6",
                       "--model", str(tmp_path / "m.json")])
        assert rc == 1

    def test_inputs_not_mutated(self, spiral_manifest, tmp_path):
        train_dir = os.path.dirname(spiral_manifest)
        tracked = sorted(
            os.path.join(train_dir, name) for name in os.listdir(train_dir))
        before = [_sha(p) for p in tracked]
        assert cli.main(["fit", "--train", spiral_manifest, "--d", "3",
                         "--model", str(tmp_path / "m.json")]) == 0
        assert [_sha(p) for p in tracked] == before


class TestModes:
    def test_table_written_and_idempotent(self, spiral_manifest, tmp_path):
        model_path = str(tmp_path / "model.json")
        assert cli.main(["fit", "--train", spiral_manifest, "--d", "4",
                         "--model", model_path]) == 0
        p1, p2 = str(tmp_path / "modes1.csv"), str(tmp_path / "modes2.csv")
        for path in (p1, p2):
            assert cli.main(["modes", "--model", model_path, "--top", "5",
                             "--out", path]) == 0
        assert open(p1, "rb").read() == open(p2, "rb").read()
        with open(p1, newline="") as fh:
            records = list(csv.reader(fh))
        assert records[0] == ["mode_index", "frequency_hz", "decay",
                              "damping_pct", "amplitude", "classification",
                              "buses"]
        assert len(records) > 1


class TestSweepD:
    def test_sweep_csv(self, spiral_manifest, tmp_path):
        out = str(tmp_path / "sweep.csv")
        rc = cli.main(["sweep-d", "--train", spiral_manifest,
                       "--test", spiral_manifest, "--d", "1:3",
                       "--rank", "2", "--center", "off", "--out", out])
        assert rc == 0
        with open(out, newline="") as fh:
            records = list(csv.reader(fh))
        assert [rec[0] for rec in records[1:]] == ["1", "2", "3"]
        assert all(float(rec[2]) < 1e-6 for rec in records[1:])

    def test_malformed_d_list(self, spiral_manifest, tmp_path):
        rc = cli.main(["sweep-d", "--train", spiral_manifest,
                       "--test", spiral_manifest, "--d", "4:2",
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 1


class TestNoise:
    def test_seed_determinism(self, spiral_manifest, tmp_path):
        outs = [str(tmp_path / f"noisy{k}") for k in range(3)]
        seeds = ["7", "7", "8"]
        for out, seed in zip(outs, seeds):
            rc = cli.main(["noise", "--in", spiral_manifest, "--snr-db", "20",
                           "--seed", seed, "--out", out])
            assert rc == 0

        def read_all(d):
            return [open(os.path.join(d, n), "rb").read()
                    for n in sorted(os.listdir(d)) if n.endswith(".csv")]

        assert read_all(outs[0]) == read_all(outs[1])
        assert read_all(outs[0]) != read_all(outs[2])

    def test_noisy_set_still_loads(self, spiral_manifest, tmp_path):
        out = str(tmp_path / "noisy")
        assert cli.main(["noise", "--in", spiral_manifest, "--snr-db", "10",
                         "--seed", "1", "--out", out]) == 0
        tset = load_trajectory_set(os.path.join(out, "manifest.json"))
        assert len(tset) == 2


class TestFft:
    def test_spectrum_csv(self, tmp_path):
        dt, n = 0.01, 512
        t = np.arange(n) * dt
        x = np.sin(2 * np.pi * 4.0 * t)
        traj = Trajectory(ChannelSchema.from_bus_ids([1]), dt, 0.0,
                          np.vstack([x, np.zeros(n)]))
        traj_path = str(tmp_path / "sine.csv")
        write_trajectory(traj, traj_path)
        out = str(tmp_path / "spec.csv")
        rc = cli.main(["fft", "--traj", traj_path, "--channel", "omega_1",
                       "--window", "none", "--out", out])
        assert rc == 0
        with open(out, newline="") as fh:
            records = list(csv.reader(fh))
        assert records[0] == ["frequency_hz", "magnitude"]
        rows = [(float(f), float(m)) for f, m in records[1:]]
        top = max(rows, key=lambda r: r[1])
        assert abs(top[0] - 4.0) < 1.0 / (n * dt) + 1e-12

    def test_unknown_channel(self, tmp_path):
        traj = Trajectory(ChannelSchema.from_bus_ids([1]), 0.01, 0.0,
                          np.random.default_rng(0).standard_normal((2, 64)))
        traj_path = str(tmp_path / "t.csv")
        write_trajectory(traj, traj_path)
        rc = cli.main(["fft", "--traj", traj_path, "--channel", "omega_9",
                       "--out", str(tmp_path / "s.csv")])
        assert rc == 2


class TestExitCodes:
    def test_no_arguments(self):
        assert cli.main([]) == 1

    def test_unknown_subcommand(self):
        assert cli.main(["frobnicate"]) == 1

    def test_missing_required_flag(self):
        assert cli.main(["fit", "--d", "2"]) == 1

    def test_help_exits_zero(self, capsys):
        assert cli.main(["--help"]) == 0
        assert "simulate" in capsys.readouterr().out
