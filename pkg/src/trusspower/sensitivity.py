"""Adjoint gradient of the peak power and the KKT-residual optimality
indicator.

The value function P(q) of the inner Gram-certificate SDP (min theta with
theta +/- q nonnegative) is differentiated through its equality duals; the
chain rule through the equilibrium solves then yields dp/da via one adjoint
solve per harmonic.  The KKT residual is the optimal value of a small LP
whose solution is available in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import SteadyState, _pinv_apply, power_coeffs, solve_equilibrium
from .conic import ConicProblemBuilder, HermitianVars
from .fem import TrussModel
from .loads import HarmonicLoad
from .solver_backend import SolveOptions, solve
from .trigpoly import TrigPoly

# two near-equal maximizers of |q| closer than this (relative) flag the
# gradient as a subgradient
KINK_RTOL = 1e-6


@dataclass
class InnerGradient:
    value: float
    grads: dict[int, complex]   # k -> dP/dq_k (Wirtinger), k >= 1
    duals_raw: np.ndarray


@dataclass
class GradientReport:
    grad: np.ndarray
    inner_value: float
    inner_value_grads: dict[int, complex]
    adjoints: dict[int, np.ndarray]
    subgradient: bool
    fd_check: float | None = None


def inner_value_grad(
    q: np.ndarray, options: SolveOptions | None = None
) -> InnerGradient:
    """Optimal value of the inner peak-power SDP and its gradient in the
    power coefficients, from the equality duals.

    `q` holds q_0..q_{2N} (q_0 must vanish: zero average power).
    """
    q = np.asarray(q, dtype=complex)
    two_n = len(q) - 1
    if two_n < 1:
        raise ValueError("need at least one harmonic coefficient")
    if abs(q[0]) > 1e-8 * (1.0 + np.abs(q).max()):
        raise ValueError("q_0 must be zero (no average power)")
    d = two_n + 1
    # P is 1-homogeneous and its gradient 0-homogeneous: solving at q/|q|
    # makes the duals independent of load scaling (exactly, not just to
    # solver tolerance)
    scale = np.abs(q).max()
    if scale == 0.0:
        return InnerGradient(0.0, {k: 0.0 + 0.0j for k in range(1, two_n + 1)},
                             np.zeros(0))
    q = q / scale

    b = ConicProblemBuilder()
    theta = b.add_vars(1)[0]
    Q1 = HermitianVars(b, d)
    Q2 = HermitianVars(b, d)
    blk1 = b.add_psd_block("Q1", 2 * d)
    Q1.add_embedded(blk1, 0, d)
    blk2 = b.add_psd_block("Q2", 2 * d)
    Q2.add_embedded(blk2, 0, d)

    b.add_equality([theta] + Q1.diag_indices(), [1.0] + [-1.0] * d, 0.0)
    b.add_equality([theta] + Q2.diag_indices(), [1.0] + [-1.0] * d, 0.0)

    # rows whose RHS carries q: remember their ids for the dual readout
    rows: dict[tuple[int, str, str], int] = {}
    for k in range(1, two_n + 1):
        for name, grams, sign in (("Q1", Q1, 1.0), ("Q2", Q2, -1.0)):
            re_idx = [grams.re_index(i, i + k) for i in range(d - k)]
            im_idx = [grams.im_index(i, i + k) for i in range(d - k)]
            # tr(Lambda_k Q) = sum_i (Re Q[i, i+k] - i Im Q[i, i+k]) = sign * q_k
            rows[(k, name, "re")] = b.add_equality(
                re_idx, [1.0] * len(re_idx), sign * q[k].real
            )
            rows[(k, name, "im")] = b.add_equality(
                im_idx, [-1.0] * len(im_idx), sign * q[k].imag
            )
    b.add_objective([theta], [1.0])
    prob = b.build()
    report = solve(prob, options)
    if not report.ok:
        raise RuntimeError(f"inner SDP failed: {report.status}")
    duals = report.equality_duals
    grads: dict[int, complex] = {}
    for k in range(1, two_n + 1):
        d_re = duals[rows[(k, "Q1", "re")]] - duals[rows[(k, "Q2", "re")]]
        d_im = duals[rows[(k, "Q1", "im")]] - duals[rows[(k, "Q2", "im")]]
        grads[k] = 0.5 * (d_re - 1j * d_im)
    return InnerGradient(
        value=float(report.objective) * scale, grads=grads, duals_raw=duals
    )


def _near_kink(q: np.ndarray) -> bool:
    """True when |q| attains its maximum at two well-separated angles within
    KINK_RTOL (peak power nonsmooth there; gradient is a subgradient)."""
    poly = TrigPoly(q)
    n = 8192 * max(1, poly.degree)
    vals = np.abs(poly.sample_uniform(n))
    vmax = vals.max()
    if vmax == 0.0:
        return True
    # local maxima above the near-top threshold
    up = vals >= np.roll(vals, 1)
    down = vals >= np.roll(vals, -1)
    peaks = np.flatnonzero(up & down & (vals >= vmax * (1 - 10 * KINK_RTOL)))
    if len(peaks) < 2:
        return False
    tops = sorted(vals[peaks])[-2:]
    sep = np.diff(sorted(peaks))
    distinct = len(peaks) > 1 and (np.max(sep) > 2 if len(sep) else False)
    return distinct and (tops[1] - tops[0]) <= KINK_RTOL * vmax


def peak_power_grad(
    model: TrussModel,
    a: np.ndarray,
    load: HarmonicLoad,
    options: SolveOptions | None = None,
    state: SteadyState | None = None,
) -> GradientReport:
    """Gradient of the peak power in the cross-section areas.

    Direct solves give c(v); the inner-SDP duals give dP/dq; adjoint solves
    with the same pseudo-inverse policy assemble
    dp/da_j = -2 Re sum_{n>=1} lambda_n^T dK_{nw}/da_j c_n(v).
    """
    a = np.asarray(a, dtype=float)
    if state is None:
        state = solve_equilibrium(model, a, load)
    q = power_coeffs(load, state)
    inner = inner_value_grad(q, options)
    N = load.n_harmonics
    M, K = model.assemble(a)

    adjoints: dict[int, np.ndarray] = {}
    grad = np.zeros(model.n_elems)
    for n in range(1, N + 1):
        # r_n = sum_{k != 0} (dP/dq_k) c_{k-n}(f), with g_{-k} = conj(g_k)
        r = np.zeros(model.n_free, dtype=complex)
        for k, g in inner.grads.items():
            r += g * load.coeff(k - n)
            r += np.conj(g) * load.coeff(-k - n)
        Kn = K - (n * load.omega0) ** 2 * M
        lam, _ = _pinv_apply(Kn, r)
        adjoints[n] = lam
        cn = state.coeff(n)
        for e in range(model.n_elems):
            el = model.elems[e]
            seed = model.dynamic_seed(e, n * load.omega0)
            grad[e] -= 2.0 * np.real(
                lam[el.dofs] @ seed @ cn[el.dofs]
            )
    return GradientReport(
        grad=grad,
        inner_value=inner.value,
        inner_value_grads=inner.grads,
        adjoints=adjoints,
        subgradient=_near_kink(q),
    )


def finite_difference_grad(
    model: TrussModel,
    a: np.ndarray,
    load: HarmonicLoad,
    rel_step: float = 1e-6,
) -> np.ndarray:
    """Central finite differences of the peak power (independent oracle)."""
    from .analysis import peak_power

    a = np.asarray(a, dtype=float)
    g = np.zeros_like(a)
    for j in range(len(a)):
        h = rel_step * max(a[j], 1e-3)
        ap = a.copy()
        am = a.copy()
        ap[j] += h
        am[j] = max(am[j] - h, 0.0)
        g[j] = (peak_power(model, ap, load) - peak_power(model, am, load)) / (
            ap[j] - am[j]
        )
    return g


def kkt_residual(
    model: TrussModel,
    a: np.ndarray,
    load: HarmonicLoad,
    mass_bound: float,
    options: SolveOptions | None = None,
    grad: np.ndarray | None = None,
) -> float:
    """Optimal value of the stationarity LP

        min  a^T gamma + Gamma (m - a^T q)
        s.t. grad p - gamma + Gamma q = 0, gamma >= 0, Gamma >= 0.

    Zero at exact KKT points of the area-only peak-power minimization.
    The LP is one-dimensional after eliminating gamma = grad p + Gamma q,
    whose objective a^T grad p + Gamma m is increasing in Gamma.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or model.mass(a) > mass_bound * (1 + 1e-9):
        raise ValueError("design must be feasible (a >= 0, mass within bound)")
    if grad is None:
        grad = peak_power_grad(model, a, load, options).grad
    w = model.weights
    if np.any(w <= 0):
        return float("inf")  # descent direction could be unbounded
    gamma_low = np.max(-grad / w)
    Gamma = max(0.0, float(gamma_low))
    return float(a @ grad + Gamma * mass_bound)
