"""Backends for solving :class:`~trusspower.conic.ConicProblem` instances.

The primary binding is Clarabel (interior point); SCS is available as a
first-order fallback.  A dense barrier "reference" path handles tiny
problems (n_vars <= 200) independently, used to cross-check equality duals.

Dual convention: ``equality_duals[i]`` is the derivative of the optimal
value with respect to ``eq_b[i]``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .conic import ConicProblem

OPTIMAL = "optimal"
NEAR_OPTIMAL = "near_optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "numerical_failure"


@dataclass
class SolveOptions:
    backend: str = "clarabel"
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    near_tol: float = 1e-5
    max_iter: int = 200_000
    verbose: bool = False


@dataclass
class SolveReport:
    status: str
    x: np.ndarray | None
    equality_duals: np.ndarray | None
    objective: float | None
    iterations: int
    solve_time: float
    backend: str
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, NEAR_OPTIMAL)


def _triangle_index_upper_colwise(dim: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = [], []
    for c in range(dim):
        for r in range(c + 1):
            rows.append(r)
            cols.append(c)
    return np.asarray(rows), np.asarray(cols)


def _triangle_index_lower_colwise(dim: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = [], []
    for c in range(dim):
        for r in range(c, dim):
            rows.append(r)
            cols.append(c)
    return np.asarray(rows), np.asarray(cols)


def _cone_matrix(problem: ConicProblem, triangle: str) -> tuple[sp.csc_matrix, np.ndarray, list[int]]:
    """Stack [equalities; nonneg var rows; ineq rows; psd blocks] as A x + s = b.

    `triangle` picks the PSD vectorization: 'upper' (Clarabel) or 'lower'
    (SCS), both column-major with off-diagonals scaled by sqrt(2).
    """
    n = problem.n_vars
    blocks_A = [problem.eq_A]
    blocks_b = [problem.eq_b]
    nn = len(problem.nonneg_vars)
    if nn:
        D = sp.csr_matrix(
            (-np.ones(nn), (np.arange(nn), problem.nonneg_vars)), shape=(nn, n)
        )
        blocks_A.append(D)
        blocks_b.append(np.zeros(nn))
    if problem.n_ineq:
        blocks_A.append(problem.ineq_A)
        blocks_b.append(problem.ineq_b)
    psd_dims = []
    for blk in problem.psd_blocks:
        d = blk.dim
        if triangle == "upper":
            tri_r, tri_c = _triangle_index_upper_colwise(d)
        else:
            tri_r, tri_c = _triangle_index_lower_colwise(d)
        # position of entry (min(r,c), max(r,c)) in the stacked triangle
        pos = np.full((d, d), -1, dtype=np.int64)
        pos[tri_r, tri_c] = np.arange(len(tri_r))
        pos[tri_c, tri_r] = np.arange(len(tri_r))
        m = len(tri_r)
        scale = np.where(blk.rows == blk.cols, 1.0, np.sqrt(2.0))
        rows_in_cone = pos[blk.rows, blk.cols]
        is_var = blk.var_idx >= 0
        A_blk = sp.csr_matrix(
            (
                -(scale * blk.vals)[is_var],
                (rows_in_cone[is_var], blk.var_idx[is_var]),
            ),
            shape=(m, n),
        )
        b_blk = np.zeros(m)
        np.add.at(b_blk, rows_in_cone[~is_var], (scale * blk.vals)[~is_var])
        blocks_A.append(A_blk)
        blocks_b.append(b_blk)
        psd_dims.append(d)
    A = sp.vstack(blocks_A, format="csc")
    b = np.concatenate(blocks_b)
    return A, b, psd_dims


def _solve_clarabel(problem: ConicProblem, opts: SolveOptions) -> SolveReport:
    import clarabel

    A, b, psd_dims = _cone_matrix(problem, "upper")
    n = problem.n_vars
    P = sp.csc_matrix((n, n))
    cones = []
    if problem.n_eq:
        cones.append(clarabel.ZeroConeT(problem.n_eq))
    nn = len(problem.nonneg_vars) + problem.n_ineq
    if nn:
        cones.append(clarabel.NonnegativeConeT(nn))
    for d in psd_dims:
        cones.append(clarabel.PSDTriangleConeT(d))
    settings = clarabel.DefaultSettings()
    settings.verbose = opts.verbose
    settings.tol_feas = opts.feas_tol
    settings.tol_gap_abs = opts.gap_tol
    settings.tol_gap_rel = opts.gap_tol
    # chordal preprocessing crashes on some of our block patterns
    # (rust panic in clique merging); the blocks are dense anyway
    settings.chordal_decomposition_enable = False
    solver = clarabel.DefaultSolver(P, problem.obj_c, A, b, cones, settings)
    sol = solver.solve()
    status_name = str(sol.status)
    status = {
        "Solved": OPTIMAL,
        "AlmostSolved": NEAR_OPTIMAL,
        "PrimalInfeasible": INFEASIBLE,
        "AlmostPrimalInfeasible": INFEASIBLE,
        "DualInfeasible": UNBOUNDED,
        "AlmostDualInfeasible": UNBOUNDED,
    }.get(status_name, FAILED)
    x = np.asarray(sol.x) if status in (OPTIMAL, NEAR_OPTIMAL) else None
    duals = None
    if x is not None and problem.n_eq:
        duals = -np.asarray(sol.z[: problem.n_eq])
    obj = (
        float(problem.obj_c @ x + problem.obj_const) if x is not None else None
    )
    return SolveReport(
        status=status,
        x=x,
        equality_duals=duals,
        objective=obj,
        iterations=int(sol.iterations),
        solve_time=float(sol.solve_time),
        backend="clarabel",
        extras={"solver_status": status_name},
    )


def _solve_scs(problem: ConicProblem, opts: SolveOptions) -> SolveReport:
    import scs

    A, b, psd_dims = _cone_matrix(problem, "lower")
    cone: dict = {}
    if problem.n_eq:
        cone["z"] = problem.n_eq
    nn = len(problem.nonneg_vars) + problem.n_ineq
    if nn:
        cone["l"] = nn
    if psd_dims:
        cone["s"] = psd_dims
    data = {"A": A, "b": b, "c": problem.obj_c}
    t0 = time.time()
    out = scs.solve(
        data,
        cone,
        eps_abs=max(opts.gap_tol, 1e-9),
        eps_rel=max(opts.gap_tol, 1e-9),
        max_iters=opts.max_iter,
        verbose=opts.verbose,
    )
    elapsed = time.time() - t0
    info = out["info"]
    raw = info["status"]
    status = {
        "solved": OPTIMAL,
        "solved (inaccurate - reached max_iters)": NEAR_OPTIMAL,
        "infeasible": INFEASIBLE,
        "unbounded": UNBOUNDED,
    }.get(raw, FAILED)
    x = out["x"] if status in (OPTIMAL, NEAR_OPTIMAL) else None
    duals = None
    if x is not None and problem.n_eq:
        duals = -np.asarray(out["y"][: problem.n_eq])
    obj = float(problem.obj_c @ x + problem.obj_const) if x is not None else None
    return SolveReport(
        status=status,
        x=x,
        equality_duals=duals,
        objective=obj,
        iterations=int(info["iter"]),
        solve_time=elapsed,
        backend="scs",
        extras={"solver_status": raw},
    )


class _Barrier:
    """Log barrier for nonneg vars and PSD blocks of a ConicProblem."""

    def __init__(self, problem: ConicProblem):
        self.nonneg = problem.nonneg_vars
        self.blocks = problem.psd_blocks
        self.degree = len(self.nonneg) + sum(blk.dim for blk in self.blocks)

    def value(self, x: np.ndarray) -> float:
        val = 0.0
        if len(self.nonneg):
            xi = x[self.nonneg]
            if np.any(xi <= 0):
                return np.inf
            val -= np.log(xi).sum()
        for blk in self.blocks:
            S = blk.evaluate(x)
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return np.inf
            d = np.diag(L)
            # rounding can let cholesky "succeed" on a singular matrix;
            # treat such points as outside the domain
            if d.min() <= 1e-8 * d.max():
                return np.inf
            val -= 2.0 * np.log(d).sum()
        return val

    def grad_hess(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(x)
        g = np.zeros(n)
        H = np.zeros((n, n))
        if len(self.nonneg):
            xi = x[self.nonneg]
            g[self.nonneg] -= 1.0 / xi
            H[self.nonneg, self.nonneg] += 1.0 / xi**2
        for blk in self.blocks:
            S = blk.evaluate(x)
            try:
                Sinv = np.linalg.inv(S)
            except np.linalg.LinAlgError:
                Sinv = np.linalg.pinv(S, hermitian=True)
            vars_in = np.unique(blk.var_idx[blk.var_idx >= 0])
            mats = {}
            for v in vars_in:
                mask = blk.var_idx == v
                Av = np.zeros((blk.dim, blk.dim))
                for r, c, val in zip(blk.rows[mask], blk.cols[mask], blk.vals[mask]):
                    Av[r, c] += val
                    if r != c:
                        Av[c, r] += val
                mats[v] = Av
                g[v] -= np.trace(Sinv @ Av)
            Ws = {v: Sinv @ Av for v, Av in mats.items()}
            for i, v in enumerate(vars_in):
                for w in vars_in[i:]:
                    hvw = np.sum(Ws[v] * Ws[w].T)
                    H[v, w] += hvw
                    if v != w:
                        H[w, v] += hvw
        return g, H


def _newton_affine(obj_grad_hess, y0, Z, x_p, tol=1e-10, max_iter=150, stop=None):
    """Damped Newton for min g(x_p + Z y); returns the centered y.

    `stop`, when given, is evaluated on each new iterate x and ends the
    iteration early once it returns True (used by the phase-I search,
    whose objective is unbounded below).
    """
    y = y0.copy()
    if Z.shape[1] == 0:
        return y
    if stop is not None and stop(x_p + Z @ y):
        return y
    for _ in range(max_iter):
        if not np.isfinite(obj_grad_hess(x_p + Z @ y, value_only=True)):
            break  # cannot descend from outside the barrier domain
        val, g, H = obj_grad_hess(x_p + Z @ y)
        gy = Z.T @ g
        Hy = Z.T @ H @ Z
        Hy = 0.5 * (Hy + Hy.T) + 1e-13 * np.eye(len(y)) * max(1.0, np.abs(Hy).max())
        try:
            dy = -sla.solve(Hy, gy, assume_a="pos")
        except np.linalg.LinAlgError:
            dy = -np.linalg.lstsq(Hy, gy, rcond=None)[0]
        dec = -gy @ dy
        if dec <= 2 * tol:
            break
        # keep iterates at a sane scale (regularized far-field steps explode)
        step_norm = np.linalg.norm(Z @ dy)
        cap = 10.0 * (1.0 + np.linalg.norm(x_p + Z @ y))
        t = min(1.0, cap / step_norm) if step_norm > 0 else 1.0
        accepted = False
        for _ in range(60):
            val_new = obj_grad_hess(x_p + Z @ (y + t * dy), value_only=True)
            if np.isfinite(val_new) and val_new <= val - 0.25 * t * dec:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        y = y + t * dy
        if stop is not None and stop(x_p + Z @ y):
            break
    return y


def _solve_reference(problem: ConicProblem, opts: SolveOptions) -> SolveReport:
    """Dense primal barrier method with null-space elimination of equalities.

    Intended for cross-checks on tiny problems; refuses n_vars > 200.
    """
    t_start = time.time()
    if problem.n_vars > 200:
        raise ValueError("reference backend only handles n_vars <= 200")

    # absorb inequality rows via nonnegative slacks
    n0 = problem.n_vars
    n = n0 + problem.n_ineq
    eq_A = sp.hstack(
        [problem.eq_A, sp.csr_matrix((problem.n_eq, problem.n_ineq))]
    ).toarray() if problem.n_eq else np.zeros((0, n))
    eq_b = problem.eq_b.copy()
    if problem.n_ineq:
        G = np.hstack([problem.ineq_A.toarray(), np.eye(problem.n_ineq)])
        eq_A = np.vstack([eq_A, G])
        eq_b = np.concatenate([eq_b, problem.ineq_b])
    slack_idx = np.arange(n0, n)
    aug = ConicProblem(
        n_vars=n,
        obj_c=np.concatenate([problem.obj_c, np.zeros(problem.n_ineq)]),
        obj_const=problem.obj_const,
        eq_A=sp.csr_matrix((0, n)),
        eq_b=np.zeros(0),
        ineq_A=sp.csr_matrix((0, n)),
        ineq_b=np.zeros(0),
        nonneg_vars=np.concatenate([problem.nonneg_vars, slack_idx]).astype(np.int64),
        psd_blocks=problem.psd_blocks,
        metadata={},
    )
    barrier = _Barrier(aug)

    if eq_A.shape[0]:
        x_p, res, *_ = np.linalg.lstsq(eq_A, eq_b, rcond=None)
        if np.linalg.norm(eq_A @ x_p - eq_b) > 1e-7 * (1 + np.linalg.norm(eq_b)):
            return SolveReport(INFEASIBLE, None, None, None, 0,
                               time.time() - t_start, "reference")
        Z = sla.null_space(eq_A)
    else:
        x_p = np.zeros(n)
        Z = np.eye(n)
    if Z.shape[1] == 0:
        Z = np.zeros((n, 0))

    # phase I: find x with x_i > 0 and S_b(x) > 0 by minimizing the margin s
    def margin(x):
        worst = 0.0
        if len(aug.nonneg_vars):
            worst = max(worst, float(-(x[aug.nonneg_vars]).min()))
        for blk in aug.psd_blocks:
            worst = max(worst, float(-np.linalg.eigvalsh(blk.evaluate(x))[0]))
        return worst

    x = x_p.copy()
    m0 = margin(x)
    if m0 >= -1e-12:
        s = m0 + 1.0

        def phase1(t1):
            def fgh(xs, value_only=False):
                xx, ss = xs[:-1], xs[-1]
                val = ss
                g = np.zeros(n + 1)
                H = np.zeros((n + 1, n + 1))
                g[-1] = 1.0
                inv_t = 1.0 / t1
                if len(aug.nonneg_vars):
                    z = xx[aug.nonneg_vars] + ss
                    if np.any(z <= 0):
                        return np.inf if value_only else (np.inf, g, H)
                    val -= inv_t * np.log(z).sum()
                    if not value_only:
                        g[aug.nonneg_vars] -= inv_t / z
                        g[-1] -= inv_t * np.sum(1 / z)
                        H[aug.nonneg_vars, aug.nonneg_vars] += inv_t / z**2
                        H[aug.nonneg_vars, -1] += inv_t / z**2
                        H[-1, aug.nonneg_vars] += inv_t / z**2
                        H[-1, -1] += inv_t * np.sum(1 / z**2)
                for blk in aug.psd_blocks:
                    S = blk.evaluate(xx) + ss * np.eye(blk.dim)
                    try:
                        Lc = np.linalg.cholesky(S)
                    except np.linalg.LinAlgError:
                        return np.inf if value_only else (np.inf, g, H)
                    val -= inv_t * 2 * np.log(np.diag(Lc)).sum()
                    if not value_only:
                        Sinv = np.linalg.inv(S)
                        vars_in = np.unique(blk.var_idx[blk.var_idx >= 0])
                        mats = {}
                        for v in vars_in:
                            mask = blk.var_idx == v
                            Av = np.zeros((blk.dim, blk.dim))
                            for r, cc, vv in zip(blk.rows[mask], blk.cols[mask], blk.vals[mask]):
                                Av[r, cc] += vv
                                if r != cc:
                                    Av[cc, r] += vv
                            mats[v] = Av
                            g[v] -= inv_t * np.trace(Sinv @ Av)
                        g[-1] -= inv_t * np.trace(Sinv)
                        keys = list(vars_in) + [-1]
                        Ws = {v: Sinv @ mats[v] for v in vars_in}
                        Ws[-1] = Sinv
                        for i, v in enumerate(keys):
                            for w in keys[i:]:
                                hvw = inv_t * np.sum(Ws[v] * Ws[w].T)
                                vi = v if v >= 0 else n
                                wi = w if w >= 0 else n
                                H[vi, wi] += hvw
                                if vi != wi:
                                    H[wi, vi] += hvw
                if value_only:
                    return val
                return val, g, H

            return fgh

        Z1 = np.zeros((n + 1, Z.shape[1] + 1))
        Z1[:n, : Z.shape[1]] = Z
        Z1[n, -1] = 1.0
        xs = np.concatenate([x_p, [s]])
        feasible = False
        for t1 in (1.0, 10.0, 100.0, 1e4, 1e6, 1e8):
            y1 = _newton_affine(
                phase1(t1), np.zeros(Z1.shape[1]), Z1, xs, tol=1e-12,
                stop=lambda z: z[-1] < -1e-8,
            )
            xs = xs + Z1 @ y1
            if xs[-1] < -1e-10:
                feasible = True
                break
        if not feasible:
            return SolveReport(INFEASIBLE, None, None, None, 0,
                               time.time() - t_start, "reference",
                               extras={"phase1_margin": float(xs[-1])})
        x = xs[:-1]

    # phase II: path following on c@x + phi(x)/t
    c = aug.obj_c
    t = 1.0
    mu = 20.0
    y = np.zeros(Z.shape[1])
    x_pII = x.copy()
    while True:
        def center(xx, value_only=False):
            if value_only:
                return c @ xx + barrier.value(xx) / t
            gb, Hb = barrier.grad_hess(xx)
            return c @ xx + barrier.value(xx) / t, c + gb / t, Hb / t

        y = _newton_affine(center, y, Z, x_pII, tol=1e-13)
        if barrier.degree / t < opts.gap_tol * (1 + abs(c @ (x_pII + Z @ y))):
            break
        t *= mu
        if t > 1e18:
            break
    x_fin = x_pII + Z @ y

    gb, _ = barrier.grad_hess(x_fin)
    duals = None
    if eq_A.shape[0]:
        w, *_ = np.linalg.lstsq(eq_A.T, c + gb / t, rcond=None)
        duals = w[: problem.n_eq]
    obj = float(problem.obj_c @ x_fin[:n0] + problem.obj_const)
    return SolveReport(
        status=OPTIMAL,
        x=x_fin[:n0],
        equality_duals=duals,
        objective=obj,
        iterations=0,
        solve_time=time.time() - t_start,
        backend="reference",
        extras={"barrier_t": t},
    )


_BACKENDS = {
    "clarabel": _solve_clarabel,
    "scs": _solve_scs,
    "reference": _solve_reference,
}


def solve(problem: ConicProblem, options: SolveOptions | None = None) -> SolveReport:
    """Solve a conic problem; never raises on solver-side failures.

    Builders may store an "objective_scale" in the metadata (the stored
    objective data is the true objective times that factor, which keeps
    poorly-scaled values near 1 for the solver); the reported objective and
    equality duals are mapped back to the true scale here.
    """
    opts = options or SolveOptions()
    fn = _BACKENDS.get(opts.backend)
    if fn is None:
        raise ValueError(f"unknown backend {opts.backend!r}")
    try:
        report = fn(problem, opts)
    except (ValueError, TypeError):
        raise
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as exc:  # incl. solver-native panics -> status code
        return SolveReport(
            status=FAILED,
            x=None,
            equality_duals=None,
            objective=None,
            iterations=0,
            solve_time=0.0,
            backend=opts.backend,
            extras={"error": repr(exc)},
        )
    scale = float(problem.metadata.get("objective_scale", 1.0))
    if scale != 1.0:
        if report.objective is not None:
            report.objective = report.objective / scale
        if report.equality_duals is not None:
            report.equality_duals = report.equality_duals / scale
    return report
