import json
from pathlib import Path

import numpy as np
import pytest

from trusspower.artifacts import active_elements
from trusspower.cli import main
from trusspower.fem import TrussModel, grid_ground_structure
from trusspower.loads import HarmonicLoad, rotating_load
from trusspower.pipeline import save_problem_file


@pytest.fixture
def tiny_problem_file(tmp_path):
    """A small problem JSON the CLI can solve quickly."""
    gs = grid_ground_structure(2, 2, 1.0, "full", [(0, "xy"), (1, "xy")])
    model = TrussModel(gs, 25000.0, 1.0)
    load = rotating_load(gs, 3, 0.5, 1, 0.0, 15.0)
    path = tmp_path / "problem.json"
    save_problem_file(path, model, load, 1.0, eta=10.0)
    return path


class TestSolveCommand:
    def test_artifact_bundle(self, tiny_problem_file, tmp_path):
        out = tmp_path / "run"
        rc = main(["solve", "--problem", str(tiny_problem_file), "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["status"] in ("optimal", "near_optimal")
        design = json.loads((out / "design.json").read_text())
        assert len(design["areas"]) == 6
        assert (out / "truss.svg").exists()
        power = (out / "power.csv").read_text().splitlines()
        assert power[0] == "t,power"
        assert len(power) == 4097

    def test_svg_segment_count_matches_active_bars(self, tiny_problem_file, tmp_path):
        out = tmp_path / "run"
        main(["solve", "--problem", str(tiny_problem_file), "--out", str(out)])
        a = np.asarray(
            json.loads((out / "design.json").read_text())["areas"]
        )
        svg = (out / "truss.svg").read_text()
        assert svg.count("<line") == len(active_elements(a))

    def test_determinism_modulo_solve_time(self, tiny_problem_file, tmp_path):
        reports = []
        for name in ("a", "b"):
            out = tmp_path / name
            main(["solve", "--problem", str(tiny_problem_file), "--out", str(out)])
            rep = json.loads((out / "report.json").read_text())
            rep.pop("solve_time")
            reports.append(rep)
        assert reports[0] == reports[1]

    def test_eta_override(self, tiny_problem_file, tmp_path):
        out = tmp_path / "run"
        main(["solve", "--problem", str(tiny_problem_file), "--eta", "0.5",
              "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert report["eta"] == 0.5

    def test_missing_input_rejected(self):
        with pytest.raises(SystemExit):
            main(["solve"])


class TestSweepCommand:
    def test_small_sweep_csv(self, tmp_path, monkeypatch):
        # substitute a tiny problem for the preset to keep the sweep quick
        import trusspower.cli as cli_mod
        from trusspower.presets import Preset

        gs = grid_ground_structure(2, 2, 1.0, "full", [(0, "xy"), (1, "xy")])
        model = TrussModel(gs, 25000.0, 1.0)
        load = rotating_load(gs, 3, 0.5, 1, 0.0, 15.0)
        tiny = Preset("tiny", "test", 1.0, 10.0, lambda: (model, load))
        monkeypatch.setattr(cli_mod, "get_preset", lambda name: tiny)

        out = tmp_path / "sweep"
        rc = main(["sweep", "--preset", "heidari-outphase",
                   "--eta-grid", "0.01:10:4:log", "--out", str(out)])
        assert rc == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 5
        header = lines[0].split(",")
        assert header[0] == "eta"
        assert "actual_peak_power" in header

    def test_bad_grid_spec(self):
        with pytest.raises(SystemExit):
            main(["sweep", "--preset", "heidari-outphase", "--eta-grid", "1:10"])


class TestTwoRotationCommand:
    def test_irrational_ratio_exit_code(self, tmp_path):
        rc = main([
            "two-rotation", "--omega1", str(float(np.pi)), "--omega2", "15",
            "--out", str(tmp_path / "tr"),
        ])
        assert rc == 2


class TestExitCodes:
    def test_solver_failure_exit_code(self, tiny_problem_file, tmp_path,
                                      monkeypatch):
        import trusspower.pipeline as pipeline_mod
        from trusspower.solver_backend import FAILED, SolveReport

        def broken_solve(problem, options=None):
            return SolveReport(FAILED, None, None, None, 0, 0.0, "clarabel")

        monkeypatch.setattr(pipeline_mod, "solve", broken_solve)
        rc = main(["solve", "--problem", str(tiny_problem_file),
                   "--out", str(tmp_path / "x")])
        assert rc == 3
