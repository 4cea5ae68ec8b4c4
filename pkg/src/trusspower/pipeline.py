"""End-to-end solve driver: build the relaxation, solve it, and validate
the design with the physics-side oracles."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .artifacts import (
    active_elements,
    write_design_json,
    write_power_csv,
    write_report_json,
    write_truss_svg,
)
from .fem import TrussModel
from .loads import HarmonicLoad
from .sdp_builder import RelaxationSolution, build_penalized_relaxation, extract_relaxation
from .sensitivity import kkt_residual, peak_power_grad
from .solver_backend import SolveOptions, solve


@dataclass
class SolveOutcome:
    model: TrussModel
    load: HarmonicLoad
    solution: RelaxationSolution | None
    report: dict

    @property
    def ok(self) -> bool:
        return self.solution is not None


def solve_problem(
    model: TrussModel,
    load: HarmonicLoad,
    mass_bound: float,
    eta: float,
    options: SolveOptions | None = None,
    diagnostics: bool = True,
) -> SolveOutcome:
    """Solve the penalized relaxation and assemble the report dictionary."""
    options = options or SolveOptions()
    problem = build_penalized_relaxation(model, load, mass_bound, eta)
    rep = solve(problem, options)
    base = {
        "eta": eta,
        "mass_bound": mass_bound,
        "n_harmonics": load.n_harmonics,
        "omega0": load.omega0,
        "backend": options.backend,
        "status": rep.status,
        "solve_time": rep.solve_time,
    }
    if not rep.ok:
        return SolveOutcome(model, load, None, base)
    sol = extract_relaxation(problem, rep)
    a = np.maximum(sol.a, 0.0)
    report = dict(base)
    report.update(
        {
            "objective": sol.objective,
            "theta": sol.theta,
            "mass": model.mass(a),
            "mass_utilization": analysis.mass_utilization(model, a, mass_bound),
            "n_elements": model.n_elems,
            "n_active_elements": int(len(active_elements(a))),
        }
    )
    if diagnostics:
        report["trace_gap"] = analysis.trace_gap(sol.X, a, load, model)
        try:
            report["actual_peak_power"] = analysis.peak_power(model, a, load)
            report["eigenfrequencies"] = [
                float(w) for w in analysis.eigenfrequencies(model, a, 3)
            ]
            grad = peak_power_grad(model, a, load, options)
            report["kkt_residual"] = kkt_residual(
                model, a, load, mass_bound, options, grad=grad.grad
            )
            report["kkt_subgradient"] = bool(grad.subgradient)
        except analysis.LoadNotCarried as exc:
            report["actual_peak_power"] = None
            report["not_carried"] = str(exc)
    sol = RelaxationSolution(
        a=a, theta=sol.theta, X=sol.X, Q1=sol.Q1, Q2=sol.Q2,
        objective=sol.objective, status=sol.status, report=sol.report,
    )
    return SolveOutcome(model, load, sol, report)


def write_artifacts(outcome: SolveOutcome, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_report_json(out / "report.json", outcome.report)
    if outcome.solution is None:
        return
    write_design_json(out / "design.json", outcome.solution.a)
    write_truss_svg(out / "truss.svg", outcome.model, outcome.solution.a)
    if outcome.report.get("actual_peak_power") is not None:
        t, p = analysis.power_trace(
            outcome.model, outcome.solution.a, outcome.load, 4096
        )
        write_power_csv(out / "power.csv", t, p)


def load_problem_file(path) -> tuple[TrussModel, HarmonicLoad, float, float]:
    """Problem file: {"model": ..., "load": ..., "mass_bound": m, "eta": e}."""
    doc = json.loads(Path(path).read_text())
    model = TrussModel.from_json(json.dumps(doc["model"]))
    load = HarmonicLoad.from_json(json.dumps(doc["load"]))
    return model, load, float(doc["mass_bound"]), float(doc.get("eta", 10.0))


def save_problem_file(path, model, load, mass_bound, eta=10.0) -> None:
    doc = {
        "model": json.loads(model.to_json()),
        "load": json.loads(load.to_json()),
        "mass_bound": mass_bound,
        "eta": eta,
    }
    Path(path).write_text(json.dumps(doc, indent=1))
