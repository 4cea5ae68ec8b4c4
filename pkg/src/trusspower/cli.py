"""Command-line front end.

Subcommands: solve (one design), sweep (penalty grid), two-rotation
(paired rotating loads), multifreq (truncated square-wave pair with a
cross-evaluation table).  Exit codes: 0 success, 2 infeasible or load not
carried, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .artifacts import write_report_json, write_sweep_csv, write_table_csv
from .pipeline import SolveOutcome, load_problem_file, solve_problem, write_artifacts
from .presets import PRESETS, get_preset, heidari_model, multifreq_load, two_rotation_load
from .solver_backend import FAILED, INFEASIBLE, SolveOptions

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_SOLVER_FAILURE = 3


def _solve_options(args) -> SolveOptions:
    return SolveOptions(backend=args.backend)


def _resolve_problem(args):
    if args.preset:
        preset = get_preset(args.preset)
        model, load = preset.build()
        eta = preset.eta if args.eta is None else args.eta
        return model, load, preset.mass_bound, eta
    if args.problem:
        model, load, mass_bound, eta = load_problem_file(args.problem)
        if args.eta is not None:
            eta = args.eta
        return model, load, mass_bound, eta
    raise SystemExit("provide --preset NAME or --problem FILE.json")


def _exit_code(outcome: SolveOutcome) -> int:
    if outcome.report["status"] == FAILED:
        return EXIT_SOLVER_FAILURE
    if outcome.report["status"] == INFEASIBLE or not outcome.ok:
        return EXIT_INFEASIBLE
    if outcome.report.get("not_carried"):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_solve(args) -> int:
    model, load, mass_bound, eta = _resolve_problem(args)
    outcome = solve_problem(model, load, mass_bound, eta, _solve_options(args))
    write_artifacts(outcome, args.out)
    r = outcome.report
    if outcome.ok:
        print(
            f"status={r['status']} theta={r['theta']:.6g} "
            f"peak_power={r.get('actual_peak_power')} "
            f"mass_utilization={r['mass_utilization']:.4f}"
        )
    else:
        print(f"status={r['status']}", file=sys.stderr)
    return _exit_code(outcome)


def _parse_eta_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 4:
        raise SystemExit("eta grid must be lo:hi:count:{log|lin}")
    lo, hi, count, kind = float(parts[0]), float(parts[1]), int(parts[2]), parts[3]
    if kind == "log":
        return np.logspace(np.log10(lo), np.log10(hi), count)
    if kind == "lin":
        return np.linspace(lo, hi, count)
    raise SystemExit(f"unknown grid kind {kind!r}")


def _sweep_row(payload):
    preset_name, eta, backend = payload
    preset = get_preset(preset_name)
    model, load = preset.build()
    outcome = solve_problem(
        model, load, preset.mass_bound, eta, SolveOptions(backend=backend)
    )
    row = {"eta": eta, "status": outcome.report["status"]}
    if outcome.ok:
        r = outcome.report
        row.update(
            theta=r["theta"],
            objective=r["objective"],
            trace_gap=r.get("trace_gap"),
            mass_utilization=r["mass_utilization"],
            actual_peak_power=r.get("actual_peak_power"),
            kkt_residual=r.get("kkt_residual"),
        )
    return row


def cmd_sweep(args) -> int:
    if not args.preset:
        raise SystemExit("sweep needs --preset")
    etas = _parse_eta_grid(args.eta_grid)
    payloads = [(args.preset, float(e), args.backend) for e in etas]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, payloads))
    else:
        rows = [_sweep_row(p) for p in payloads]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out / "sweep.csv", rows)
    n_bad = sum(1 for r in rows if r["status"] not in ("optimal", "near_optimal"))
    print(f"sweep: {len(rows)} solves, {n_bad} failures -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_two_rotation(args) -> int:
    model = heidari_model()
    try:
        load, omega0, n1, n2 = two_rotation_load(
            model, args.omega1, args.omega2, args.phi1, args.phi2
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    outcome = solve_problem(model, load, args.mass_bound, args.eta,
                            _solve_options(args))
    outcome.report.update(
        {"omega1": args.omega1, "omega2": args.omega2,
         "omega0": omega0, "n1": n1, "n2": n2}
    )
    write_artifacts(outcome, args.out)
    if outcome.ok:
        r = outcome.report
        eig1 = r.get("eigenfrequencies", [None])[0]
        print(
            f"omega0={omega0} n1={n1} n2={n2} "
            f"peak_power={r.get('actual_peak_power')} first_eig={eig1}"
        )
    return _exit_code(outcome)


def cmd_multifreq(args) -> int:
    model = heidari_model()
    load = multifreq_load(model, args.n_harmonics, args.period, args.delay)
    outcome = solve_problem(model, load, args.mass_bound, args.eta,
                            _solve_options(args))
    write_artifacts(outcome, args.out)
    if not outcome.ok:
        return _exit_code(outcome)

    # cross-evaluate designs under different truncations of the same load
    uniform = model.uniform_design(args.mass_bound)
    designs = {"uniform": uniform, f"optimized_n{args.n_harmonics}": outcome.solution.a}
    truncations = sorted({3, 5, 31} | {args.n_harmonics})
    header = ["n_harmonics"] + list(designs)
    rows = []
    for n in truncations:
        eval_load = multifreq_load(model, n, args.period, args.delay)
        row = [n]
        for name, a in designs.items():
            try:
                row.append(f"{analysis.peak_power(model, a, eval_load):.6g}")
            except analysis.LoadNotCarried:
                row.append("not_carried")
        rows.append(row)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table_csv(out / "cross_evaluation.csv", header, rows)
    write_report_json(out / "report.json", outcome.report)
    for row in [header] + rows:
        print(",".join(str(v) for v in row))
    return _exit_code(outcome)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="trusspower",
        description="Peak-power truss design via penalized SDP relaxation",
    )
    ap.add_argument("--backend", default="clarabel",
                    choices=["clarabel", "scs", "reference"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one preset or problem file")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--problem", default=None, help="problem JSON file")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None, help="unused by presets")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="penalty sweep over an eta grid")
    p.add_argument("--preset", choices=sorted(PRESETS), required=True)
    p.add_argument("--eta-grid", default="1e-9:10:80:log")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("two-rotation", help="two rotating loads on the 21-bar truss")
    p.add_argument("--omega1", type=float, required=True)
    p.add_argument("--omega2", type=float, required=True)
    p.add_argument("--phi1", type=float, default=np.pi / 2)
    p.add_argument("--phi2", type=float, default=-np.pi / 2)
    p.add_argument("--eta", type=float, default=10.0)
    p.add_argument("--mass-bound", type=float, default=1.0)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_two_rotation)

    p = sub.add_parser("multifreq", help="square-wave pair with cross-evaluation")
    p.add_argument("--n-harmonics", type=int, default=3)
    p.add_argument("--period", type=float, default=2.0)
    p.add_argument("--delay", type=float, default=0.2)
    p.add_argument("--eta", type=float, default=10.0)
    p.add_argument("--mass-bound", type=float, default=1.0)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_multifreq)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
