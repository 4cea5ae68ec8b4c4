"""Trigonometric polynomials on the unit circle and their Gram machinery.

A trigonometric polynomial p(z) = sum_{|k| <= D} c_k z^{-k} with the
symmetry c_{-k} = conj(c_k) is real-valued on |z| = 1.  Nonnegativity is
certified by a PSD Gram matrix Q with c_k = tr(Lambda_k Q), where Lambda_k
are 0/1 Toeplitz selectors; sum-of-squares factors are recovered from the
spectral decomposition of Q.
"""

from __future__ import annotations

import numpy as np

from .conic import ConicProblemBuilder, HermitianVars
from .solver_backend import INFEASIBLE, SolveOptions, solve


class TrigPoly:
    """Coefficients c_0..c_D (negative indices implied by symmetry).

    c_0 must be real (within rounding); the value on the unit circle is
    real by construction.
    """

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("coeffs must be a nonempty 1-D sequence")
        if abs(c[0].imag) > 1e-10 * (1.0 + abs(c[0])):
            raise ValueError("constant coefficient must be real")
        c = c.copy()
        c[0] = c[0].real
        self.coeffs = c

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k: int) -> complex:
        if abs(k) > self.degree:
            return 0.0 + 0.0j
        return self.coeffs[k] if k >= 0 else np.conj(self.coeffs[-k])

    def eval_theta(self, theta) -> np.ndarray:
        """p(e^{i theta}), guaranteed real."""
        theta = np.asarray(theta, dtype=float)
        ks = np.arange(1, self.degree + 1)
        # p = c0 + 2 Re sum_k c_k e^{-ik theta}
        phases = np.exp(-1j * np.multiply.outer(theta, ks))
        return self.coeffs[0].real + 2.0 * (phases @ self.coeffs[1:]).real

    def eval(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.eval_theta(np.angle(z))

    def sample_uniform(self, n: int) -> np.ndarray:
        """Values at n equispaced angles via FFT."""
        D = self.degree
        if n <= 2 * D:
            raise ValueError("need more samples than 2*degree")
        a = np.zeros(n, dtype=complex)
        a[: D + 1] = self.coeffs
        if D >= 1:
            a[n - D:] = np.conj(self.coeffs[1:][::-1])
        return np.fft.fft(a).real

    def max_abs_on_circle(self, samples_per_degree: int = 4096) -> float:
        """max over |z| = 1 of |p(z)| by dense sampling plus local refinement."""
        D = max(1, self.degree)
        n = samples_per_degree * D
        vals = np.abs(self.sample_uniform(n))
        order = np.argsort(vals)[::-1]
        # refine around the best few distinct samples
        picked: list[int] = []
        for idx in order:
            if all(min(abs(idx - p), n - abs(idx - p)) > 2 for p in picked):
                picked.append(int(idx))
            if len(picked) == 3:
                break
        h = 2.0 * np.pi / n
        best = float(vals[order[0]])
        for idx in picked:
            theta0 = 2.0 * np.pi * idx / n
            lo, hi = theta0 - h, theta0 + h
            best = max(best, _golden_max(lambda t: abs(float(self.eval_theta(t))), lo, hi))
        return best


def _golden_max(f, lo: float, hi: float, iters: int = 80) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a < 1e-14:
            break
    return max(fc, fd)


def lambda_matrix(k: int, size: int) -> np.ndarray:
    """Toeplitz selector: (Lambda_k)_{ij} = 1 iff j - i = k."""
    if abs(k) >= size:
        raise ValueError(f"|k| = {abs(k)} out of range for size {size}")
    L = np.zeros((size, size))
    for i in range(size):
        j = i + k
        if 0 <= j < size:
            L[i, j] = 1.0
    return L


def gram_to_coeffs(Q: np.ndarray) -> TrigPoly:
    """Polynomial represented by a Hermitian Gram matrix: c_k = tr(Lambda_k Q)."""
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("Gram matrix must be square")
    asym = np.abs(Q - Q.conj().T).max()
    if asym > 1e-10 * max(1.0, np.abs(Q).max()):
        raise ValueError(f"Gram matrix not Hermitian (asymmetry {asym:.2e})")
    d = Q.shape[0]
    # tr(Lambda_k Q) sums the k-th subdiagonal of Q
    coeffs = [np.trace(Q, offset=-k) for k in range(d)]
    return TrigPoly(coeffs)


def certify_nonneg(
    p: TrigPoly, options: SolveOptions | None = None
) -> np.ndarray | None:
    """PSD Gram matrix certifying p >= 0 on the circle, or None if p takes
    negative values (exact dichotomy for univariate trigonometric
    polynomials)."""
    d = p.degree + 1
    b = ConicProblemBuilder()
    Q = HermitianVars(b, d)
    blk = b.add_psd_block("Q", 2 * d)
    Q.add_embedded(blk, 0, d)
    # tr(Lambda_k Q) = sum_i Q[i+k, i] = sum_i conj(Q[i, i+k])
    for k in range(d):
        ridx, rco, iidx, ico = [], [], [], []
        for i in range(d - k):
            ridx.append(Q.re_index(i, i + k))
            rco.append(1.0)
            if k > 0:
                iidx.append(Q.im_index(i, i + k))
                ico.append(-1.0)
        ck = p.coeff(k)
        b.add_equality(ridx, rco, ck.real)
        if k > 0:
            b.add_equality(iidx, ico, ck.imag)
    prob = b.build()
    report = solve(prob, options)
    if report.status == INFEASIBLE:
        return None
    if not report.ok:
        raise RuntimeError(f"Gram certification solve failed: {report.status}")
    return Q.extract(report.x)


def sos_extract(Q: np.ndarray, tol: float = 1e-10) -> list[np.ndarray]:
    """Spectral SOS factors h_j (coefficients of z^0..z^D) with
    sum_j |h_j(z)|^2 = psi(z)* Q psi(z) on the circle."""
    Q = np.asarray(Q, dtype=complex)
    w, V = np.linalg.eigh(Q)
    scale = max(np.abs(w).max(), 1.0)
    if w.min() < -tol * scale:
        raise ValueError(f"matrix is not PSD (lambda_min = {w.min():.3e})")
    out = []
    for lam, v in zip(w, V.T):
        if lam > tol * scale:
            out.append(np.sqrt(lam) * np.conj(v))
    return out


def sos_eval(factors: list[np.ndarray], z) -> np.ndarray:
    """sum_j |h_j(z)|^2 at points z on the unit circle."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    total = np.zeros(len(z))
    for h in factors:
        powers = z[:, None] ** np.arange(len(h))
        total += np.abs(powers @ h) ** 2
    return total


def max_abs_on_circle(p: TrigPoly, samples_per_degree: int = 4096) -> float:
    return p.max_abs_on_circle(samples_per_degree)
