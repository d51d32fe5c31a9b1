"""Tests for the command-line interface."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from pathparam import KinematicLimits, SearchContradictionError, StallError
from pathparam.cli import main
from pathparam.io import load_metrics, load_path, load_trajectory, save_path
from pathparam.path1d import decompose, time_optimal_traversal, \
    waypoint_acc_ranges

LIMITS_7 = None  # CLI falls back to the built-in 7-joint limits


def write_arc(tmp_path):
    """A short 2-D path file: monotone first dim, reversing second."""
    x = np.linspace(0.0, 0.8, 17)
    y = 0.25 * np.sin(np.pi * x / 0.8)
    file = tmp_path / "arc.json"
    save_path(file, np.column_stack((x, y)))
    return file


def write_limits(tmp_path, dims):
    file = tmp_path / "limits.json"
    file.write_text(json.dumps({"v_max": [1.71] * dims,
                                "a_max": [15.0] * dims,
                                "j_max": [300.0] * dims,
                                "jerk_limit_factor": 1.0}))
    return file


# =========================================================================
# Dataset generation
# =========================================================================

class TestGenDataset:
    def test_random_1d_files_load(self, tmp_path, capsys):
        out = tmp_path / "data"
        code = main(["gen-dataset", "--kind", "random-1d", "--seed", "5",
                     "--count", "3", "--out", str(out)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["count"] == 3
        for k in range(3):
            mp = load_path(out / f"path_{k:03d}.json")
            assert mp.dims == 1

    def test_generation_is_reproducible(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert main(["gen-dataset", "--kind", "random-walk",
                         "--seed", "3", "--count", "2", "--dims", "3",
                         "--duration", "1.0", "--out", str(out)]) == 0
        for k in range(2):
            name = f"path_{k:03d}.json"
            assert (a / name).read_bytes() == (b / name).read_bytes()


# =========================================================================
# Single-dimension commands
# =========================================================================

class TestTraverse1d:
    def test_matches_direct_call(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        limits = write_limits(tmp_path, 2)
        out = tmp_path / "run"
        code = main(["traverse-1d", "--path", str(file), "--dim", "0",
                     "--limits", str(limits), "--out", str(out)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        kl = KinematicLimits.symmetric(1.71, 15.0, 300.0)
        mp = load_path(file)
        expected = time_optimal_traversal(
            waypoint_acc_ranges(mp.paths[0], kl), kl).total_duration
        assert summary["duration_s"] == pytest.approx(expected, abs=1e-12)
        assert load_metrics(out / "metrics.json")["duration_s"] == \
            pytest.approx(expected, abs=1e-12)
        table = load_trajectory(out / "trajectory.csv")
        assert table.dims == 1
        assert table.position[-1, 0] == pytest.approx(0.8, abs=1e-9)


class TestFeasibleAcc:
    def test_interior_waypoints_have_headroom(self, tmp_path, capsys):
        file = tmp_path / "zigzag.json"
        save_path(file, [0.0, 1.2, -0.4, 0.8])
        limits = write_limits(tmp_path, 1)
        code = main(["feasible-acc", "--path", str(file), "--dim", "0",
                     "--limits", str(limits)])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("waypoint,position,kind")
        assert len(lines) == 5
        # signed ranges: the reversal waypoints still offer real headroom
        for row in (lines[2], lines[3]):
            a_max = float(row.split(",")[4])
            assert abs(a_max) > 0.0


# =========================================================================
# The full pipeline
# =========================================================================

class TestParameterize:
    def test_end_to_end_outputs(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        out = tmp_path / "run"
        code = main(["parameterize", "--path", str(file), "--iters", "3",
                     "--limits", str(write_limits(tmp_path, 2)),
                     "--out", str(out)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        metrics = load_metrics(out / "metrics.json")
        assert summary["duration_s"] == metrics["duration_s"]
        assert len(metrics["per_iteration"]) == 3
        assert 0 <= metrics["best_iteration"] < 3
        table = load_trajectory(out / "trajectory.csv")
        assert table.dims == 2
        assert table.t[-1] == pytest.approx(metrics["duration_s"],
                                            rel=1e-12)
        rows = (out / "iterations.csv").read_text().strip().splitlines()
        assert len(rows) == 4

    def test_evaluate_reproduces_metrics(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        out = tmp_path / "run"
        assert main(["parameterize", "--path", str(file), "--iters", "2",
                     "--limits", str(write_limits(tmp_path, 2)),
                     "--out", str(out)]) == 0
        capsys.readouterr()
        code = main(["evaluate", "--path", str(file),
                     "--trajectory", str(out / "trajectory.csv")])
        assert code == 0
        recomputed = json.loads(capsys.readouterr().out)
        metrics = load_metrics(out / "metrics.json")
        for key in ("deviation_mean_rad", "deviation_max_rad",
                    "duration_s"):
            assert recomputed[key] == pytest.approx(metrics[key], abs=1e-9)

    def test_runs_are_byte_identical(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        runs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert main(["parameterize", "--path", str(file),
                         "--iters", "2",
                         "--limits", str(write_limits(tmp_path, 2)),
                         "--out", str(out)]) == 0
            runs.append(out)
        for name in ("trajectory.csv", "metrics.json", "iterations.csv"):
            assert (runs[0] / name).read_bytes() == \
                (runs[1] / name).read_bytes()

    def test_plot_data_emits_series(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        out = tmp_path / "run"
        assert main(["parameterize", "--path", str(file), "--iters", "1",
                     "--limits", str(write_limits(tmp_path, 2)),
                     "--out", str(out)]) == 0
        target = tmp_path / "series.json"
        code = main(["plot-data", "--trajectory",
                     str(out / "trajectory.csv"), "--out", str(target)])
        assert code == 0
        series = json.loads(target.read_text())
        assert set(series) == {"t", "p_0", "p_1", "v_0", "v_1",
                               "a_0", "a_1", "j_0", "j_1"}


# =========================================================================
# Error handling and exit codes
# =========================================================================

class TestErrorHandling:
    def test_missing_path_file_is_input_error(self, tmp_path, capsys):
        code = main(["traverse-1d", "--path", str(tmp_path / "nope.json"),
                     "--dim", "0", "--out", str(tmp_path / "out")])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: input:")

    def test_dimension_mismatch_is_input_error(self, tmp_path, capsys):
        file = write_arc(tmp_path)
        code = main(["parameterize", "--path", str(file),
                     "--limits", str(write_limits(tmp_path, 4)),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "dimensions" in capsys.readouterr().err

    def test_constant_path_is_input_error(self, tmp_path, capsys):
        file = tmp_path / "flat.json"
        file.write_text('{"dimensions": 1, "waypoints": [[0.5], [0.5]]}')
        code = main(["parameterize", "--path", str(file),
                     "--out", str(tmp_path / "out"),
                     "--limits", str(write_limits(tmp_path, 1))])
        assert code == 2

    def test_stall_maps_to_infeasible_exit(self, tmp_path, capsys,
                                           monkeypatch):
        import pathparam.cli as cli

        def boom(*args, **kwargs):
            raise StallError("wedged")

        monkeypatch.setattr(cli, "iterate", boom)
        code = main(["parameterize", "--path", str(write_arc(tmp_path)),
                     "--limits", str(write_limits(tmp_path, 2)),
                     "--out", str(tmp_path / "out")])
        assert code == 3
        assert capsys.readouterr().err.startswith("error: infeasible:")

    def test_contradiction_maps_to_internal_exit(self, tmp_path, capsys,
                                                 monkeypatch):
        import pathparam.cli as cli

        def boom(*args, **kwargs):
            raise SearchContradictionError("impossible")

        monkeypatch.setattr(cli, "iterate", boom)
        code = main(["parameterize", "--path", str(write_arc(tmp_path)),
                     "--limits", str(write_limits(tmp_path, 2)),
                     "--out", str(tmp_path / "out")])
        assert code == 4
        assert capsys.readouterr().err.startswith("error: internal:")

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "pathparam",
                               "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "parameterize" in proc.stdout
