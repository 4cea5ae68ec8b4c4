"""Multi-harmonic periodic load vectors via complex Fourier coefficients.

A load f(t) = sum_{k=-N..N} c_k e^{i k w0 t} is stored through its
coefficients for k >= 1 only; conjugate symmetry c_{-k} = conj(c_k) is
applied on demand and c_0 = 0 always (no constant load component).
"""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from .fem import GroundStructure


class HarmonicLoad:
    """Periodic nodal load with N harmonics of base frequency omega0.

    Parameters
    ----------
    omega0 : float
        Base angular frequency (rad/s).
    n_harmonics : int
        Highest harmonic index N; coefficients beyond it are zero.
    coeffs : dict[int, ndarray]
        Complex coefficient vectors (length n_free) for k in 1..N.
        Missing harmonics are zero vectors.
    n_dof : int
        Length of the coefficient vectors (free DOF count).
    """

    def __init__(self, omega0: float, n_harmonics: int, coeffs: dict, n_dof: int):
        if omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if n_harmonics < 1:
            raise ValueError("need at least one harmonic")
        self.omega0 = float(omega0)
        self.n_harmonics = int(n_harmonics)
        self.n_dof = int(n_dof)
        self._coeffs: dict[int, np.ndarray] = {}
        for k, v in coeffs.items():
            k = int(k)
            if not 1 <= k <= self.n_harmonics:
                raise ValueError(f"harmonic index {k} outside 1..{self.n_harmonics}")
            v = np.asarray(v, dtype=complex)
            if v.shape != (self.n_dof,):
                raise ValueError(f"coefficient vector for k={k} has wrong length")
            if np.any(v != 0):
                self._coeffs[k] = v

    def coeff(self, k: int) -> np.ndarray:
        """c_k with conjugate symmetry; zero vector for k = 0 or |k| > N."""
        if k == 0 or abs(k) > self.n_harmonics:
            return np.zeros(self.n_dof, dtype=complex)
        if k > 0:
            return self._coeffs.get(k, np.zeros(self.n_dof, dtype=complex)).copy()
        return np.conj(self.coeff(-k))

    @property
    def active_harmonics(self) -> list[int]:
        return sorted(self._coeffs)

    def eval_time(self, t) -> np.ndarray:
        """Real force vector(s) f(t); t may be scalar or 1-D array."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n_dof,), dtype=complex)
        for k, c in self._coeffs.items():
            phase = np.exp(1j * k * self.omega0 * t)
            out += np.multiply.outer(phase, c)
        return 2.0 * out.real if t.ndim else 2.0 * out.real.reshape(self.n_dof)

    def __add__(self, other: "HarmonicLoad") -> "HarmonicLoad":
        if not isinstance(other, HarmonicLoad):
            return NotImplemented
        if other.n_dof != self.n_dof:
            raise ValueError("loads act on different DOF sets")
        if not np.isclose(other.omega0, self.omega0, rtol=1e-12, atol=0.0):
            raise ValueError(
                "loads combine only when they share the base frequency; "
                "use harmonic_base() to find a common one"
            )
        n = max(self.n_harmonics, other.n_harmonics)
        coeffs: dict[int, np.ndarray] = {}
        for k in set(self._coeffs) | set(other._coeffs):
            coeffs[k] = self.coeff(k) + other.coeff(k)
        return HarmonicLoad(self.omega0, n, coeffs, self.n_dof)

    def scaled(self, factor: complex) -> "HarmonicLoad":
        return HarmonicLoad(
            self.omega0,
            self.n_harmonics,
            {k: factor * v for k, v in self._coeffs.items()},
            self.n_dof,
        )

    def to_json(self) -> str:
        entries = []
        for k in self.active_harmonics:
            v = self._coeffs[k]
            for dof in np.flatnonzero(v):
                entries.append(
                    {"k": int(k), "dof": int(dof), "re": float(v[dof].real),
                     "im": float(v[dof].imag)}
                )
        return json.dumps(
            {"omega0": self.omega0, "N": self.n_harmonics, "n_dof": self.n_dof,
             "entries": entries}
        )

    @classmethod
    def from_json(cls, text: str) -> "HarmonicLoad":
        doc = json.loads(text)
        coeffs: dict[int, np.ndarray] = {}
        for e in doc["entries"]:
            k = int(e["k"])
            if k not in coeffs:
                coeffs[k] = np.zeros(doc["n_dof"], dtype=complex)
            coeffs[k][int(e["dof"])] += e["re"] + 1j * e["im"]
        return cls(doc["omega0"], doc["N"], coeffs, doc["n_dof"])


def _node_free_dofs(gs: GroundStructure, node: int) -> tuple[int, int]:
    fx, fy = gs.node_free_dofs(node)
    if fx < 0 or fy < 0:
        raise ValueError(f"node {node} has a fixed DOF; cannot be loaded")
    return fx, fy


def rotating_load(
    gs: GroundStructure,
    node: int,
    amplitude: float,
    harmonic: int,
    phase: float,
    omega0: float,
    n_harmonics: int | None = None,
    sense: int = 1,
) -> HarmonicLoad:
    """Force of constant magnitude `amplitude` rotating at `harmonic`*omega0.

    In the time domain f_x = A cos(n w0 t + phase), f_y = sense * A
    sin(n w0 t + phase); the corresponding single nonzero coefficient is
    c_n = A e^{i phase} (1/2, sense/(2i)) on the node's (x, y) DOFs.
    """
    if harmonic < 1:
        raise ValueError("harmonic must be >= 1")
    if sense not in (1, -1):
        raise ValueError("sense must be +1 or -1")
    fx, fy = _node_free_dofs(gs, node)
    n = n_harmonics if n_harmonics is not None else harmonic
    if harmonic > n:
        raise ValueError("harmonic exceeds n_harmonics")
    c = np.zeros(gs.n_free, dtype=complex)
    rot = amplitude * np.exp(1j * phase)
    c[fx] = rot / 2.0
    c[fy] = sense * rot / 2j
    return HarmonicLoad(omega0, n, {harmonic: c}, gs.n_free)


def square_wave_load(
    gs: GroundStructure,
    node: int,
    axis: str,
    period: float,
    n_harmonics: int,
    delay: float = 0.0,
) -> HarmonicLoad:
    """Odd +-1 square wave of the given period on one DOF, truncated at
    n_harmonics, optionally delayed in time.

    Coefficients are (i/pi) ((-1)^k - 1)/k * e^{-i k w T0}; even harmonics
    vanish.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be >= 1")
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    fx, fy = _node_free_dofs(gs, node)
    dof = fx if axis == "x" else fy
    omega = 2.0 * np.pi / period
    coeffs: dict[int, np.ndarray] = {}
    for k in range(1, n_harmonics + 1):
        ck = (1j / np.pi) * ((-1) ** k - 1) / k * np.exp(-1j * k * omega * delay)
        if ck != 0:
            v = np.zeros(gs.n_free, dtype=complex)
            v[dof] = ck
            coeffs[k] = v
    return HarmonicLoad(omega, n_harmonics, coeffs, gs.n_free)


def eval_time(load: HarmonicLoad, t) -> np.ndarray:
    return load.eval_time(t)


def harmonic_base(
    omega1: float, omega2: float, tol: float = 1e-9
) -> tuple[float, int, int]:
    """(omega0, n1, n2) with omega1 = n1*omega0, omega2 = n2*omega0.

    Requires the frequency ratio to be rational within `tol` (relative);
    raises ValueError otherwise.
    """
    if omega1 <= 0 or omega2 <= 0:
        raise ValueError("frequencies must be positive")
    ratio = omega1 / omega2
    frac = Fraction(ratio).limit_denominator(10_000)
    if abs(float(frac) - ratio) > tol * ratio:
        raise ValueError(
            f"frequency ratio {ratio} is not rational within tolerance {tol}; "
            "the two frequencies must be integer multiples of a common base"
        )
    n1, n2 = frac.numerator, frac.denominator
    omega0 = omega2 / n2
    return omega0, n1, n2
