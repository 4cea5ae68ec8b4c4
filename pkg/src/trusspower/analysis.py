"""Physics-side validation independent of the SDP machinery.

Steady-state equilibrium solves via rank-revealing pseudo-inverse, the
time-domain/trig-poly peak-power oracle, well-defined eigenfrequencies of
the (K, M) pencil, the trace gap of a lifted solution, and mass accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .fem import TrussModel
from .loads import HarmonicLoad
from .trigpoly import TrigPoly

RANK_RTOL = 1e-10     # singular values below this (relative) count as zero
RANGE_RTOL = 1e-8     # load component outside the range above this -> NotCarried


class LoadNotCarried(Exception):
    """The design cannot sustain the load: some c_k(f) has a component
    outside the range of the dynamic stiffness K_{k w}(a)."""

    def __init__(self, harmonic: int, residual: float):
        self.harmonic = harmonic
        self.residual = residual
        super().__init__(
            f"harmonic {harmonic}: load component outside range "
            f"(relative residual {residual:.3e})"
        )


@dataclass
class SteadyState:
    """Velocity Fourier coefficients c_k(v) for k = 1..N and the equation
    residual norm per harmonic."""

    coeffs: dict[int, np.ndarray]
    residuals: dict[int, float]

    def coeff(self, k: int) -> np.ndarray:
        if k == 0 or abs(k) > max(self.coeffs):
            n = len(next(iter(self.coeffs.values())))
            return np.zeros(n, dtype=complex)
        return self.coeffs[k] if k > 0 else np.conj(self.coeffs[-k])


def _pinv_apply(K: np.ndarray, rhs: np.ndarray, rank_rtol: float = RANK_RTOL):
    """Solve K x = rhs through the eigendecomposition of symmetric K.

    Returns (x, range_residual) where range_residual is the norm of the rhs
    component outside the numerical range of K, relative to |rhs|.
    """
    w, V = np.linalg.eigh(K)
    scale = np.abs(w).max() if len(w) else 0.0
    keep = np.abs(w) > rank_rtol * scale
    coef = V[:, keep].conj().T @ rhs
    x = V[:, keep] @ (coef / w[keep])
    rnorm = np.linalg.norm(rhs)
    out_of_range = np.linalg.norm(rhs - V[:, keep] @ coef)
    rel = out_of_range / rnorm if rnorm > 0 else 0.0
    return x, rel


def solve_equilibrium(
    model: TrussModel, a: np.ndarray, load: HarmonicLoad
) -> SteadyState:
    """Steady-state velocities: K_{kw}(a) c_k(v) = i k w c_k(f), k = 1..N.

    Raises LoadNotCarried when a carried harmonic has load content outside
    the numerical range of its dynamic stiffness.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("areas must be nonnegative")
    M, K = model.assemble(a)
    coeffs: dict[int, np.ndarray] = {}
    residuals: dict[int, float] = {}
    for k in range(1, load.n_harmonics + 1):
        ck_f = load.coeff(k)
        Kk = K - (k * load.omega0) ** 2 * M
        rhs = 1j * k * load.omega0 * ck_f
        x, rel = _pinv_apply(Kk, rhs)
        if rel > RANGE_RTOL and np.linalg.norm(ck_f) > 0:
            raise LoadNotCarried(k, rel)
        coeffs[k] = x
        res = np.linalg.norm(Kk @ x - rhs)
        residuals[k] = float(res)
    return SteadyState(coeffs=coeffs, residuals=residuals)


def power_coeffs(load: HarmonicLoad, state: SteadyState) -> np.ndarray:
    """Coefficients q_0..q_{2N} of the instant power trigonometric
    polynomial, q_k = sum_n c_{k-n}(f)^T c_n(v)."""
    N = load.n_harmonics
    q = np.zeros(2 * N + 1, dtype=complex)
    for k in range(0, 2 * N + 1):
        total = 0.0 + 0.0j
        for n in range(-N, N + 1):
            if abs(k - n) > N or n == 0:
                continue
            total += load.coeff(k - n) @ state.coeff(n)
        q[k] = total
    return q


def power_poly(load: HarmonicLoad, state: SteadyState) -> TrigPoly:
    q = power_coeffs(load, state)
    q[0] = q[0].real  # zero up to rounding: no average power in steady state
    return TrigPoly(q)


def peak_power(model: TrussModel, a: np.ndarray, load: HarmonicLoad) -> float:
    """max_t |f(t)^T v(t)| through the power polynomial's max modulus."""
    state = solve_equilibrium(model, a, load)
    return power_poly(load, state).max_abs_on_circle()


def power_trace(
    model: TrussModel, a: np.ndarray, load: HarmonicLoad, n_samples: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """(t, p(t)) over one period of the base frequency."""
    state = solve_equilibrium(model, a, load)
    t = np.linspace(0.0, 2 * np.pi / load.omega0, n_samples, endpoint=False)
    f_t = load.eval_time(t)
    v = HarmonicLoad(load.omega0, load.n_harmonics,
                     {k: state.coeffs[k] for k in state.coeffs
                      if np.any(state.coeffs[k] != 0)},
                     load.n_dof)
    v_t = v.eval_time(t)
    return t, np.sum(f_t * v_t, axis=1)


def peak_power_sampled(
    model: TrussModel, a: np.ndarray, load: HarmonicLoad, n_samples: int = 65536
) -> float:
    """Independent time-domain oracle: dense sampling of |f(t)^T v(t)| with
    parabolic refinement around the best sample."""
    t, p = power_trace(model, a, load, n_samples)
    i = int(np.argmax(np.abs(p)))
    # three-point parabolic refinement on |p|
    ts = t[[(i - 1) % n_samples, i, (i + 1) % n_samples]]
    ys = np.abs(p[[(i - 1) % n_samples, i, (i + 1) % n_samples]])
    denom = ys[0] - 2 * ys[1] + ys[2]
    if denom >= 0:
        return float(ys[1])
    dt = t[1] - t[0]
    shift = 0.5 * (ys[0] - ys[2]) / denom
    t_star = t[i] + shift * dt
    state = solve_equilibrium(model, a, load)
    v = HarmonicLoad(load.omega0, load.n_harmonics,
                     {k: state.coeffs[k] for k in state.coeffs
                      if np.any(state.coeffs[k] != 0)},
                     load.n_dof)
    p_star = abs(float(load.eval_time(t_star) @ v.eval_time(t_star)))
    return max(float(ys[1]), p_star)


def eigenfrequencies(model: TrussModel, a: np.ndarray, count: int = 3) -> np.ndarray:
    """Smallest well-defined angular eigenfrequencies of K(a) w = l M(a) w.

    The pencil is projected onto the numerical range of M(a); kernel modes
    of M (which are also kernel modes of K) are excluded.
    """
    a = np.asarray(a, dtype=float)
    if np.all(a == 0):
        raise ValueError("design is empty")
    M, K = model.assemble(a)
    wM, VM = np.linalg.eigh(M)
    keep = wM > 1e-10 * wM.max()
    if not np.any(keep):
        raise ValueError("mass matrix is numerically zero")
    U = VM[:, keep]
    Kr = U.T @ K @ U
    Mr = U.T @ M @ U
    lam = sla.eigh(Kr, Mr, eigvals_only=True)
    lam = np.maximum(lam, 0.0)
    return np.sqrt(lam[:count])


def trace_gap(
    X: np.ndarray, a: np.ndarray, load: HarmonicLoad, model: TrussModel
) -> float:
    """tr(X - F* L(a)^+ F); nonnegative whenever the bordered LMI holds."""
    X = np.asarray(X, dtype=complex)
    F = _build_F_cached(load)
    M, K = model.assemble(np.asarray(a, dtype=float))
    N = load.n_harmonics
    n = model.n_free
    gap = float(np.trace(X).real)
    for k in range(1, N + 1):
        Kk = K - (k * load.omega0) ** 2 * M
        Fk = F[(k - 1) * n : k * n, :]
        w, V = np.linalg.eigh(Kk)
        keep = np.abs(w) > RANK_RTOL * np.abs(w).max()
        proj = V[:, keep].conj().T @ Fk
        gap -= float(np.einsum("ij,i,ij->", np.conj(proj), 1.0 / w[keep], proj).real)
    return gap


def _build_F_cached(load: HarmonicLoad) -> np.ndarray:
    from .sdp_builder import build_F

    return build_F(load)


def mass(model: TrussModel, a) -> float:
    return model.mass(a)


def mass_utilization(model: TrussModel, a, mass_bound: float) -> float:
    return model.mass(a) / mass_bound
