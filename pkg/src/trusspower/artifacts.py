"""Result artifacts: JSON reports, SVG truss drawings, CSV traces."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .fem import TrussModel

# bars thinner than this fraction of the thickest are treated as removed
REMOVED_RTOL = 1e-6


def active_elements(a: np.ndarray, rtol: float = REMOVED_RTOL) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0 or a.max() <= 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(a > rtol * a.max())


def write_design_json(path, a: np.ndarray) -> None:
    Path(path).write_text(json.dumps({"areas": list(map(float, a))}, indent=1))


def write_report_json(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True))


def truss_svg(model: TrussModel, a: np.ndarray, width: int = 640) -> str:
    """Line drawing with stroke width proportional to the bar area; bars
    below the removal threshold are not drawn."""
    gs = model.gs
    a = np.asarray(a, dtype=float)
    active = active_elements(a)
    lo = gs.nodes.min(axis=0)
    hi = gs.nodes.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = 0.08 * span.max()
    scale = width / (span[0] + 2 * margin)
    height = int(np.ceil((span[1] + 2 * margin) * scale))

    def xy(p):
        x = (p[0] - lo[0] + margin) * scale
        y = height - (p[1] - lo[1] + margin) * scale
        return x, y

    amax = a.max() if a.size and a.max() > 0 else 1.0
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    ]
    for e in active:
        i, j = gs.elements[e]
        (x1, y1), (x2, y2) = xy(gs.nodes[i]), xy(gs.nodes[j])
        w = max(0.3, 8.0 * a[e] / amax)
        lines.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="black" stroke-width="{w:.3f}" stroke-linecap="round"/>'
        )
    fixed_nodes = sorted({n for n, _ in gs.supports})
    for nidx in fixed_nodes:
        x, y = xy(gs.nodes[nidx])
        lines.append(
            f'<rect x="{x - 4:.2f}" y="{y - 4:.2f}" width="8" height="8" '
            f'fill="none" stroke="gray"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines)


def write_truss_svg(path, model: TrussModel, a: np.ndarray) -> None:
    Path(path).write_text(truss_svg(model, a))


def write_power_csv(path, t: np.ndarray, p: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "power"])
        for ti, pi in zip(t, p):
            w.writerow([f"{ti:.10g}", f"{pi:.10g}"])


def write_sweep_csv(path, rows: list[dict]) -> None:
    cols = [
        "eta", "status", "theta", "objective", "trace_gap",
        "mass_utilization", "actual_peak_power", "kkt_residual",
    ]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row.get(c, "") for c in cols])


def write_table_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
