import numpy as np
import pytest
import scipy.linalg as sla

from trusspower.analysis import peak_power, power_coeffs, solve_equilibrium
from trusspower.conic import HermitianVars
from trusspower.fem import GroundStructure, TrussModel, heidari_ground_structure
from trusspower.loads import HarmonicLoad
from trusspower.sdp_builder import (
    build_compliance_sdp,
    build_F,
    build_penalized_relaxation,
    build_single_harmonic_sdp,
    c_selector_matrix,
    c_selector_positions,
    extract_relaxation,
    herm_to_real,
    shifted_coeffs,
)
from trusspower.solver_backend import SolveOptions, solve
from trusspower.trigpoly import TrigPoly, certify_nonneg

from conftest import random_box_load


class TestHermToReal:
    def test_real_scalar(self):
        assert np.array_equal(herm_to_real(np.array([[1.0]])), np.eye(2))

    def test_pauli_matrix_eigenvalues(self):
        H = np.array([[0.0, -1j], [1j, 0.0]])
        w = np.linalg.eigvalsh(herm_to_real(H))
        assert np.allclose(w, [-1, -1, 1, 1])

    def test_spectrum_doubles(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        H = (A + A.conj().T) / 2
        w_h = np.sort(np.linalg.eigvalsh(H))
        w_e = np.sort(np.linalg.eigvalsh(herm_to_real(H)))
        assert np.abs(w_e - np.repeat(w_h, 2)).max() <= 1e-10

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            herm_to_real(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestBuildF:
    def n3_load(self):
        rng = np.random.default_rng(1)
        coeffs = {k: rng.normal(size=3) + 1j * rng.normal(size=3) for k in (1, 2, 3)}
        return HarmonicLoad(2.0, 3, coeffs, 3)

    def test_layout_n3(self):
        load = self.n3_load()
        F = build_F(load)
        n = 3
        assert F.shape == (9, 9)
        # column 1 = T_2 c = (c3, 0, 0); column 3 = D c; column 9 = (0, 0, conj(c3))
        assert np.allclose(F[:, 0], np.r_[load.coeff(3), np.zeros(2 * n)])
        Dc = np.r_[
            1j * 2.0 * load.coeff(1),
            2j * 2.0 * load.coeff(2),
            3j * 2.0 * load.coeff(3),
        ]
        assert np.allclose(F[:, 2], Dc)
        assert np.allclose(F[:, 8], np.r_[np.zeros(2 * n), np.conj(load.coeff(3))])

    def test_layout_n1_against_shift_oracle(self):
        rng = np.random.default_rng(2)
        c1 = rng.normal(size=4) + 1j * rng.normal(size=4)
        load = HarmonicLoad(5.0, 1, {1: c1}, 4)
        F = build_F(load)
        assert F.shape == (4, 3)
        assert np.allclose(F[:, 0], 1j * 5.0 * c1)          # D c in column N=1
        assert np.allclose(F[:, 1], shifted_coeffs(load, -1))  # c_0 = 0
        assert not F[:, 1].any()
        assert np.allclose(F[:, 2], np.conj(c1))

    def test_shift_vanishes_beyond_n(self):
        load = self.n3_load()
        for k in (3, 4, 7):
            assert not shifted_coeffs(load, k).any()


class TestCSelectors:
    def test_trace_identity_matches_positions(self):
        rng = np.random.default_rng(3)
        N = 2
        A = rng.normal(size=(3 * N, 3 * N)) + 1j * rng.normal(size=(3 * N, 3 * N))
        X = (A + A.conj().T) / 2
        for k in list(range(-2 * N, 0)) + list(range(1, 2 * N + 1)):
            via_matrix = np.trace(c_selector_matrix(k, N) @ X)
            via_pos = sum(X[r, c] for r, c in c_selector_positions(k, N))
            assert via_matrix == pytest.approx(via_pos)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(4)
        N = 3
        A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        X = (A + A.conj().T) / 2
        for k in range(1, 2 * N + 1):
            qk = sum(X[r, c] for r, c in c_selector_positions(k, N))
            qmk = sum(X[r, c] for r, c in c_selector_positions(-k, N))
            assert qmk == pytest.approx(np.conj(qk))

    def test_k_zero_rejected(self):
        with pytest.raises(ValueError):
            c_selector_positions(0, 2)

    def test_against_equilibrium_oracle(self, two_bar_model):
        """tr(C_k F* L^+ F) must equal the power coefficients from a direct
        equilibrium solve, for every k."""
        model = two_bar_model
        rng = np.random.default_rng(5)
        n = model.n_free
        load = HarmonicLoad(
            3.0, 2,
            {k: rng.normal(size=n) + 1j * rng.normal(size=n) for k in (1, 2)},
            n,
        )
        a = np.array([0.3, 0.7])
        state = solve_equilibrium(model, a, load)
        q = power_coeffs(load, state)
        F = build_F(load)
        M, K = model.assemble(a)
        blocks = [
            np.linalg.pinv(K - (k * load.omega0) ** 2 * M) for k in (1, 2)
        ]
        X = F.conj().T @ sla.block_diag(*blocks) @ F
        for k in range(1, 5):
            via_X = sum(X[r, c] for r, c in c_selector_positions(k, 2))
            assert via_X == pytest.approx(q[k], abs=1e-9 * max(1, abs(q[k])))

    def test_single_harmonic_q2_on_uniform_design(self):
        model = TrussModel(heidari_ground_structure(), 25000.0, 1.0)
        rng = np.random.default_rng(6)
        n = model.n_free
        c1 = rng.normal(size=n) + 1j * rng.normal(size=n)
        load = HarmonicLoad(15.0, 1, {1: c1}, n)
        a = model.uniform_design(1.0)
        state = solve_equilibrium(model, a, load)
        # q_2 = c_1(f)^T c_1(v) and q_1 = 0 when c_0 = 0
        q = power_coeffs(load, state)
        assert q[2] == pytest.approx(c1 @ state.coeff(1))
        assert abs(q[1]) <= 1e-12 * abs(q[2])
        F = build_F(load)
        M, K = model.assemble(a)
        Kw = K - load.omega0**2 * M
        X = F.conj().T @ np.linalg.pinv(Kw) @ F
        via_X = sum(X[r, c] for r, c in c_selector_positions(2, 1))
        assert via_X == pytest.approx(q[2], rel=1e-9)


class TestComplianceSdp:
    def test_single_bar_closed_form(self, single_bar_model):
        model = single_bar_model
        f = np.zeros(model.n_free)
        fy = model.gs.node_free_dofs(0)[1]
        f[fy] = 1.0
        mass_bound = 1.0  # rho * L = 1 -> a* = 1
        prob = build_compliance_sdp(model, f, mass_bound)
        rep = solve(prob, SolveOptions())
        # theta* = f^T K(a*)^+ f = L / (E a*)
        assert rep.objective == pytest.approx(1.0 / 25000.0, rel=1e-6)

    def test_zero_load(self, single_bar_model):
        prob = build_compliance_sdp(
            single_bar_model, np.zeros(single_bar_model.n_free), 1.0
        )
        rep = solve(prob, SolveOptions())
        assert rep.objective == pytest.approx(0.0, abs=1e-8)

    def test_against_plastic_design_reference(self):
        """Independent oracle: for one static load the optimal compliance is
        (min sum L_e |N_e| over force equilibria B N = f)^2 / (E m), the
        classical plastic-design LP (solved here with scipy's linprog)."""
        import scipy.optimize as sopt

        model = TrussModel(heidari_ground_structure(), 25000.0, 1.0)
        gs = model.gs
        n = model.n_free
        f = np.zeros(n)
        node = 9  # a bottom-row node
        f[gs.node_free_dofs(node)[1]] = 1.0
        mass_bound = 1.0
        prob = build_compliance_sdp(model, f, mass_bound)
        rep = solve(prob, SolveOptions())
        sol = extract_relaxation(prob, rep)

        # equilibrium matrix: f = sum_e N_e * (unit direction incidence)
        B = np.zeros((n, model.n_elems))
        lengths = np.zeros(model.n_elems)
        for e, (i, j) in enumerate(gs.elements):
            d = gs.nodes[j] - gs.nodes[i]
            L = np.linalg.norm(d)
            lengths[e] = L
            cx, cy = d / L
            for gdof, val in (
                (2 * i, -cx), (2 * i + 1, -cy), (2 * j, cx), (2 * j + 1, cy)
            ):
                fi = gs.free_index(gdof)
                if fi >= 0:
                    B[fi, e] += val
        # split N = N+ - N-; min L @ (N+ + N-) s.t. B(N+ - N-) = f
        m = model.n_elems
        c = np.r_[lengths, lengths]
        A_eq = np.hstack([B, -B])
        lp = sopt.linprog(c, A_eq=A_eq, b_eq=f, bounds=[(0, None)] * (2 * m),
                          method="highs")
        assert lp.status == 0
        compliance_ref = lp.fun**2 / (model.E * mass_bound)
        assert sol.theta == pytest.approx(compliance_ref, rel=1e-6)

    def test_schur_tightness(self, box_model):
        rng = np.random.default_rng(8)
        f = rng.normal(size=box_model.n_free)
        prob = build_compliance_sdp(box_model, f, 2.0)
        rep = solve(prob, SolveOptions())
        sol = extract_relaxation(prob, rep)
        _, K = box_model.assemble(np.maximum(sol.a, 0))
        direct = f @ np.linalg.pinv(K, hermitian=True) @ f
        assert sol.theta == pytest.approx(direct, rel=1e-6)


class TestPenalizedRelaxation:
    def test_injected_physical_point_is_feasible(self, box_model):
        """Assemble (a, theta, X = F* L^+ F, Q1, Q2) from a physical solve and
        check every equality row of the built problem is satisfied."""
        model = box_model
        load = random_box_load(model, seed=9)
        a = model.uniform_design(1.0)
        prob = build_penalized_relaxation(model, load, 1.0, 10.0)

        state = solve_equilibrium(model, a, load)
        q = power_coeffs(load, state)
        F = build_F(load)
        M, K = model.assemble(a)
        blocks = [
            np.linalg.pinv(K - (k * load.omega0) ** 2 * M)
            for k in range(1, load.n_harmonics + 1)
        ]
        X = F.conj().T @ sla.block_diag(*blocks) @ F
        theta = TrigPoly(q).max_abs_on_circle() * (1 + 1e-6)
        plus = TrigPoly(np.r_[theta + q[0], q[1:]])
        minus = TrigPoly(np.r_[theta - q[0], -q[1:]])
        Q1 = certify_nonneg(plus)
        Q2 = certify_nonneg(minus)
        assert Q1 is not None and Q2 is not None

        x = np.zeros(prob.n_vars)
        meta = prob.metadata
        a0, m = meta["a"]
        x[a0 : a0 + m] = a
        x[meta["theta"]] = theta
        for name, H in (("X", X), ("Q1", Q1), ("Q2", Q2)):
            hv = HermitianVars.peek(meta[name])
            for i in range(hv.dim):
                for j in range(i, hv.dim):
                    x[hv.re_index(i, j)] = H[i, j].real
                    if i < j:
                        x[hv.im_index(i, j)] = H[i, j].imag
        resid = np.abs(prob.equality_residual(x)).max()
        assert resid <= 1e-6 * max(1.0, theta)

    def test_eta_zero_lower_bound_property(self, box_model):
        model = box_model
        load = random_box_load(model, seed=10)
        prob0 = build_penalized_relaxation(model, load, 1.0, 0.0)
        rep0 = solve(prob0, SolveOptions())
        theta_lb = extract_relaxation(prob0, rep0).theta
        rng = np.random.default_rng(11)
        for _ in range(3):
            a = rng.uniform(0.05, 1.0, model.n_elems)
            a *= 1.0 / model.mass(a)
            assert theta_lb <= peak_power(model, a, load) + 1e-6

    def test_eta_ten_theta_matches_actual_peak(self, box_model):
        model = box_model
        load = random_box_load(model, seed=12)
        prob = build_penalized_relaxation(model, load, 1.0, 10.0)
        rep = solve(prob, SolveOptions())
        sol = extract_relaxation(prob, rep)
        actual = peak_power(model, np.maximum(sol.a, 0.0), load)
        assert sol.theta == pytest.approx(actual, rel=1e-4)

    def test_objective_monotone_in_eta(self, box_model):
        model = box_model
        load = random_box_load(model, seed=13)
        values = []
        for eta in (0.0, 0.1, 1.0, 10.0):
            prob = build_penalized_relaxation(model, load, 1.0, eta)
            rep = solve(prob, SolveOptions())
            values.append(rep.objective)
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_negative_eta_rejected(self, box_model):
        load = random_box_load(box_model, seed=14)
        with pytest.raises(ValueError):
            build_penalized_relaxation(box_model, load, 1.0, -1.0)

    def test_extracted_hermitian(self, box_model):
        load = random_box_load(box_model, seed=15)
        prob = build_penalized_relaxation(box_model, load, 1.0, 10.0)
        sol = extract_relaxation(prob, solve(prob, SolveOptions()))
        for H in (sol.X, sol.Q1, sol.Q2):
            assert np.abs(H - H.conj().T).max() <= 1e-9 * max(1, np.abs(H).max())


class TestSingleHarmonicPreset:
    def test_delegates_to_general_builder(self, box_model):
        rng = np.random.default_rng(16)
        f_R = rng.normal(size=box_model.n_free)
        f_I = rng.normal(size=box_model.n_free)
        prob = build_single_harmonic_sdp(box_model, f_R, f_I, 15.0, 1.0, 10.0)
        assert prob.metadata["N"] == 1
        rep = solve(prob, SolveOptions())
        sol = extract_relaxation(prob, rep)
        c1 = (f_R - 1j * f_I) / 2.0
        load = HarmonicLoad(15.0, 1, {1: c1}, box_model.n_free)
        actual = peak_power(box_model, np.maximum(sol.a, 0), load)
        assert sol.theta == pytest.approx(actual, rel=1e-4)

    def test_zero_load_zero_power(self, box_model):
        z = np.zeros(box_model.n_free)
        prob = build_single_harmonic_sdp(box_model, z, z, 15.0, 1.0, 10.0)
        rep = solve(prob, SolveOptions())
        assert rep.objective == pytest.approx(0.0, abs=1e-7)
