"""Conic program construction: compliance SDP and penalized peak-power
relaxation.

The peak-power relaxation minimizes theta + eta * tr(X) subject to the
bordered LMI [[X, F*], [F, L(a)]] >= 0 with L(a) the block-diagonal dynamic
stiffness over harmonics 1..N, plus the Gram-certificate equalities tying
the power coefficients tr(C_k X) to two PSD matrices Q1, Q2 (theta +/- q
both nonnegative on the circle).  Hermitian blocks are embedded into real
symmetric ones by the doubling identity [[Re, -Im], [Im, Re]].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import ConicProblem, ConicProblemBuilder, HermitianVars
from .fem import TrussModel
from .loads import HarmonicLoad
from .solver_backend import SolveReport


def herm_to_real(H: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]].

    PSD iff H is PSD; every eigenvalue of H appears twice.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("need a square matrix")
    asym = np.abs(H - H.conj().T).max()
    if asym > 1e-10 * max(1.0, np.abs(H).max()):
        raise ValueError(f"matrix not Hermitian (asymmetry {asym:.2e})")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def stacked_coeffs(load: HarmonicLoad) -> np.ndarray:
    """c(f): blocks c_1(f)..c_N(f) stacked into one column."""
    return np.concatenate([load.coeff(k) for k in range(1, load.n_harmonics + 1)])


def shifted_coeffs(load: HarmonicLoad, k: int) -> np.ndarray:
    """T_k c(f): block n holds c_{n+k}(f)."""
    return np.concatenate(
        [load.coeff(n + k) for n in range(1, load.n_harmonics + 1)]
    )


def build_F(load: HarmonicLoad) -> np.ndarray:
    """Load matrix with 3N columns: column k (1-based) is T_{N-k} c(f) for
    k != N and D c(f) = (i n w c_n(f))_n for k = N."""
    N = load.n_harmonics
    n = load.n_dof
    F = np.zeros((N * n, 3 * N), dtype=complex)
    Dc = np.concatenate(
        [1j * k * load.omega0 * load.coeff(k) for k in range(1, N + 1)]
    )
    for col in range(1, 3 * N + 1):
        F[:, col - 1] = Dc if col == N else shifted_coeffs(load, N - col)
    return F


def c_selector_positions(k: int, N: int) -> list[tuple[int, int]]:
    """0-based entries (r, c) of X with q_k = sum X[r, c], for k != 0.

    Derived from q_k = (T_{-k}c)* L^+ (Dc) + (Dc)* L^+ (T_k c) and the
    column layout of F: the terms are X[N-1+k, N-1] and X[N-1, N-1-k],
    dropped when the index leaves 0..3N-1.
    """
    if k == 0:
        raise ValueError("k = 0 has no selector (average power is zero)")
    pos = []
    r = N - 1 + k
    if 0 <= r < 3 * N:
        pos.append((r, N - 1))
    c = N - 1 - k
    if 0 <= c < 3 * N:
        pos.append((N - 1, c))
    return pos


def c_selector_matrix(k: int, N: int) -> np.ndarray:
    """Constant C_k with tr(C_k X) = q_k for Hermitian X."""
    C = np.zeros((3 * N, 3 * N), dtype=complex)
    for r, c in c_selector_positions(k, N):
        C[c, r] += 1.0
    return C


@dataclass
class RelaxationSolution:
    """Extracted primal variables of a solved relaxation."""

    a: np.ndarray
    theta: float
    X: np.ndarray | None
    Q1: np.ndarray | None
    Q2: np.ndarray | None
    objective: float
    status: str
    report: SolveReport = field(repr=False, default=None)


def _add_element_block(blk, model: TrussModel, e: int, seed: np.ndarray,
                       offset: int, embed_shift: int) -> None:
    """Add one element's seed (times a_e) at a diagonal sub-block, both in
    the Re copy and its embedded duplicate."""
    dofs = model.elems[e].dofs
    for p in range(len(dofs)):
        for q in range(len(dofs)):
            if dofs[p] > dofs[q]:
                continue
            v = seed[p, q]
            if v == 0.0:
                continue
            r, c = offset + int(dofs[p]), offset + int(dofs[q])
            blk.add(r, c, v, var=e)
            blk.add(embed_shift + r, embed_shift + c, v, var=e)


def build_compliance_sdp(
    model: TrussModel, f: np.ndarray, mass_bound: float
) -> ConicProblem:
    """min theta s.t. a >= 0, q@a <= mass_bound, [[theta, f^T], [f, K(a)]] >= 0.

    Tight for static compliance by the generalized Schur complement.
    """
    f = np.asarray(f, dtype=float)
    n = model.n_free
    if f.shape != (n,):
        raise ValueError(f"load vector must have length {n}")
    m = model.n_elems
    b = ConicProblemBuilder()
    a_idx = b.add_vars(m, nonneg=True)
    theta = b.add_vars(1)[0]
    b.add_inequality(a_idx, model.weights, mass_bound)
    blk = b.add_psd_block("compliance_lmi", 1 + n)
    blk.add(0, 0, 1.0, var=theta)
    for i in np.flatnonzero(f):
        blk.add(0, 1 + int(i), float(f[i]))
    for e in range(m):
        el = model.elems[e]
        dofs = el.dofs
        for p in range(len(dofs)):
            for q in range(len(dofs)):
                if dofs[p] > dofs[q]:
                    continue
                v = el.k_local[p, q]
                if v != 0.0:
                    blk.add(1 + int(dofs[p]), 1 + int(dofs[q]), v, var=e)
    # compliance values are ~1/E; scale the objective so the solver's
    # absolute gap tolerance translates into relative accuracy
    b.add_objective([theta], [model.E])
    return b.build(
        metadata={
            "kind": "compliance",
            "a": [0, m],
            "theta": int(theta),
            "mass_bound": mass_bound,
            "objective_scale": model.E,
        }
    )


def build_penalized_relaxation(
    model: TrussModel,
    load: HarmonicLoad,
    mass_bound: float,
    eta: float,
) -> ConicProblem:
    """Penalized convex relaxation of peak-power minimization.

    Variables: areas a, bound theta, lifted Hermitian X (3N x 3N), Gram
    matrices Q1, Q2 ((2N+1) square); objective theta + eta * tr(X).
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if load.n_dof != model.n_free:
        raise ValueError("load and model DOF counts differ")
    N = load.n_harmonics
    omega = load.omega0
    n = model.n_free
    m = model.n_elems
    d_gram = 2 * N + 1

    b = ConicProblemBuilder()
    a_idx = b.add_vars(m, nonneg=True)
    theta = b.add_vars(1)[0]
    X = HermitianVars(b, 3 * N)
    Q1 = HermitianVars(b, d_gram)
    Q2 = HermitianVars(b, d_gram)

    b.add_inequality(a_idx, model.weights, mass_bound)

    # bordered LMI over the complex matrix [[X, F*], [F, L(a)]]
    Dc = 3 * N + N * n
    blk = b.add_psd_block("bordered_lmi", 2 * Dc)
    X.add_embedded(blk, 0, Dc)
    F = build_F(load)
    for (r, i), val in np.ndenumerate(F):
        if val == 0.0:
            continue
        # B[i, 3N + r] = conj(F[r, i]), B Hermitian
        rr, cc = i, 3 * N + r
        blk.add(rr, cc, val.real)
        blk.add(Dc + rr, Dc + cc, val.real)
        if val.imag != 0.0:
            # Im B[rr, cc] = -Im F[r, i]; upper-right embedded block is -Im B
            blk.add(rr, Dc + cc, val.imag)
            blk.add(cc, Dc + rr, -val.imag)
    for kh in range(1, N + 1):
        offset = 3 * N + (kh - 1) * n
        lam = kh * omega
        for e in range(m):
            _add_element_block(blk, model, e, model.dynamic_seed(e, lam), offset, Dc)

    # Gram PSD blocks
    blk1 = b.add_psd_block("Q1", 2 * d_gram)
    Q1.add_embedded(blk1, 0, d_gram)
    blk2 = b.add_psd_block("Q2", 2 * d_gram)
    Q2.add_embedded(blk2, 0, d_gram)

    # theta = tr(Lambda_0 Q1) = tr(Lambda_0 Q2)
    b.add_equality([theta] + Q1.diag_indices(), [1.0] + [-1.0] * d_gram, 0.0)
    b.add_equality([theta] + Q2.diag_indices(), [1.0] + [-1.0] * d_gram, 0.0)

    # tr(C_k X) = tr(Lambda_k Q1) = -tr(Lambda_k Q2) for k = 1..2N
    for k in range(1, 2 * N + 1):
        x_terms: list[tuple[int, complex]] = []
        for (r, c) in c_selector_positions(k, N):
            x_terms.extend(X.entry(r, c))
        for grams, sign in ((Q1, -1.0), (Q2, 1.0)):
            terms = list(x_terms)
            for i in range(d_gram - k):
                for var, co in grams.entry(i + k, i):
                    terms.append((var, sign * co))
            idx = [t[0] for t in terms]
            co = np.asarray([t[1] for t in terms], dtype=complex)
            b.add_equality(idx, co.real, 0.0)
            b.add_equality(idx, co.imag, 0.0)

    b.add_objective([theta], [1.0])
    if eta > 0:
        b.add_objective(X.diag_indices(), [eta] * (3 * N))
    return b.build(
        metadata={
            "kind": "peak_power_relaxation",
            "a": [0, m],
            "theta": int(theta),
            "X": X.layout(),
            "Q1": Q1.layout(),
            "Q2": Q2.layout(),
            "N": N,
            "omega": omega,
            "n_free": n,
            "eta": eta,
            "mass_bound": mass_bound,
        }
    )


def build_single_harmonic_sdp(
    model: TrussModel,
    f_R: np.ndarray,
    f_I: np.ndarray,
    omega: float,
    mass_bound: float,
    eta: float,
) -> ConicProblem:
    """Preset path for loads f(t) = f_R cos(w t) + f_I sin(w t).

    Converts to the single Fourier coefficient c_1 = (f_R - i f_I)/2 and
    delegates to the general penalized relaxation with N = 1.
    """
    f_R = np.asarray(f_R, dtype=float)
    f_I = np.asarray(f_I, dtype=float)
    c1 = (f_R - 1j * f_I) / 2.0
    load = HarmonicLoad(omega, 1, {1: c1}, model.n_free)
    return build_penalized_relaxation(model, load, mass_bound, eta)


def extract_relaxation(problem: ConicProblem, report: SolveReport) -> RelaxationSolution:
    """Pull named variables out of a solved relaxation or compliance problem."""
    if report.x is None:
        raise ValueError(f"no primal solution (status {report.status})")
    meta = problem.metadata
    a0, m = meta["a"]
    a = np.asarray(report.x[a0 : a0 + m])
    theta = float(report.x[meta["theta"]])
    X = Q1 = Q2 = None
    if "X" in meta:
        X = HermitianVars.peek(meta["X"]).extract(report.x)
        Q1 = HermitianVars.peek(meta["Q1"]).extract(report.x)
        Q2 = HermitianVars.peek(meta["Q2"]).extract(report.x)
    return RelaxationSolution(
        a=a,
        theta=theta,
        X=X,
        Q1=Q1,
        Q2=Q2,
        objective=float(report.objective),
        status=report.status,
        report=report,
    )
