import numpy as np
import pytest

from trusspower.analysis import peak_power
from trusspower.loads import HarmonicLoad
from trusspower.sensitivity import (
    finite_difference_grad,
    inner_value_grad,
    kkt_residual,
    peak_power_grad,
)

from conftest import random_box_load


class TestInnerValueGrad:
    def test_single_q2_value_and_gradient(self):
        # P = max |q2 z^-2 + conj| = 2 |q2|
        q = np.array([0.0, 0.0, 0.5 + 0.0j])
        ig = inner_value_grad(q)
        assert ig.value == pytest.approx(1.0, abs=1e-7)
        # dP/dRe q2 = 2 via the Wirtinger convention dP = 2 Re(g dq)
        assert 2 * ig.grads[2].real == pytest.approx(2.0, abs=1e-5)

    def test_zero_coefficients(self):
        ig = inner_value_grad(np.zeros(3, complex))
        assert ig.value == 0.0
        assert all(g == 0 for g in ig.grads.values())

    def test_gradient_scale_invariance(self):
        rng = np.random.default_rng(0)
        q = np.r_[0.0, rng.normal(size=4) + 1j * rng.normal(size=4)]
        g1 = inner_value_grad(q)
        g2 = inner_value_grad(3.0 * q)
        assert g2.value == pytest.approx(3.0 * g1.value, rel=1e-9)
        for k in g1.grads:
            assert g2.grads[k] == pytest.approx(g1.grads[k], abs=1e-12)

    def test_against_finite_differences(self):
        rng = np.random.default_rng(1)
        q = np.r_[0.0, rng.normal(size=4) + 1j * rng.normal(size=4)]
        ig = inner_value_grad(q)
        h = 1e-6
        for k in range(1, 5):
            for which in ("re", "im"):
                dq = np.zeros_like(q)
                dq[k] = h if which == "re" else 1j * h
                vp = inner_value_grad(q + dq).value
                vm = inner_value_grad(q - dq).value
                fd = (vp - vm) / (2 * h)
                g = ig.grads[k]
                pred = 2 * g.real if which == "re" else -2 * g.imag
                assert fd == pytest.approx(pred, abs=2e-3)

    def test_nonzero_average_rejected(self):
        with pytest.raises(ValueError, match="q_0"):
            inner_value_grad(np.array([1.0, 0.5 + 0j]))


class TestPeakPowerGrad:
    def test_single_bar_analytic(self, single_bar_model):
        model = single_bar_model
        fy = model.gs.node_free_dofs(0)[1]
        c1 = np.zeros(model.n_free, dtype=complex)
        c1[fy] = 0.3 + 0.2j
        load = HarmonicLoad(12.0, 1, {1: c1}, model.n_free)
        a = np.array([0.7])
        p = peak_power(model, a, load)
        rep = peak_power_grad(model, a, load)
        # p = 2 w |c1|^2 / (a |k - w^2 m|) => dp/da = -p/a
        assert rep.grad[0] == pytest.approx(-p / a[0], rel=1e-6)

    def test_matches_finite_differences_multiharmonic(self, box_model):
        load = random_box_load(box_model, seed=2)
        a = np.full(box_model.n_elems, 0.5)
        adj = peak_power_grad(box_model, a, load)
        fd = finite_difference_grad(box_model, a, load)
        err = np.abs(adj.grad - fd).max() / max(np.abs(fd).max(), 1e-12)
        assert err <= 1e-3

    def test_random_designs_fd_property(self, box_model):
        rng = np.random.default_rng(3)
        load = random_box_load(box_model, seed=4)
        checked = 0
        for _ in range(10):
            a = rng.uniform(0.1, 1.0, box_model.n_elems)
            adj = peak_power_grad(box_model, a, load)
            if adj.subgradient:
                continue  # nonsmooth point: resample
            fd = finite_difference_grad(box_model, a, load)
            err = np.abs(adj.grad - fd).max() / max(np.abs(fd).max(), 1e-12)
            assert err <= 1e-3
            checked += 1
        assert checked >= 5

    def test_load_scaling_quarters(self, box_model):
        load = random_box_load(box_model, seed=5)
        a = np.full(box_model.n_elems, 0.6)
        g1 = peak_power_grad(box_model, a, load).grad
        g2 = peak_power_grad(box_model, a, load.scaled(2.0)).grad
        assert np.abs(g2 - 4.0 * g1).max() <= 1e-8 * np.abs(g1).max()

    def test_kink_flag_on_pure_single_harmonic(self, single_bar_model):
        # single-harmonic power is a pure second-harmonic cosine: its modulus
        # peaks twice per period, so the gradient is only a subgradient
        model = single_bar_model
        fy = model.gs.node_free_dofs(0)[1]
        c1 = np.zeros(model.n_free, dtype=complex)
        c1[fy] = 1.0
        load = HarmonicLoad(12.0, 1, {1: c1}, model.n_free)
        rep = peak_power_grad(model, np.array([0.7]), load)
        assert rep.subgradient


class TestKktResidual:
    def test_zero_at_single_bar_optimum(self, single_bar_model):
        model = single_bar_model
        fy = model.gs.node_free_dofs(0)[1]
        c1 = np.zeros(model.n_free, dtype=complex)
        c1[fy] = 0.3 + 0.2j
        load = HarmonicLoad(12.0, 1, {1: c1}, model.n_free)
        # p decreasing in a => optimum at the mass bound, KKT residual 0
        assert kkt_residual(model, np.array([1.0]), load, 1.0) == pytest.approx(
            0.0, abs=1e-9
        )

    def test_off_optimum_matches_closed_form(self, single_bar_model):
        # p(a) = C/a with dp/da = -p/a: the LP value is p(a) (m - a) / a
        model = single_bar_model
        fy = model.gs.node_free_dofs(0)[1]
        c1 = np.zeros(model.n_free, dtype=complex)
        c1[fy] = 0.3 + 0.2j
        load = HarmonicLoad(12.0, 1, {1: c1}, model.n_free)
        a = 0.5
        p = peak_power(model, np.array([a]), load)
        val = kkt_residual(model, np.array([a]), load, 1.0)
        assert val == pytest.approx(p * (1.0 - a) / a, rel=1e-5)
        assert val > 0

    def test_closed_form_matches_linprog(self, box_model):
        import scipy.optimize as sopt

        load = random_box_load(box_model, seed=6)
        rng = np.random.default_rng(7)
        w = box_model.weights
        for _ in range(5):
            a = rng.uniform(0.05, 0.6, box_model.n_elems)
            a *= rng.uniform(0.3, 1.0) / box_model.mass(a)
            grad = peak_power_grad(box_model, a, load).grad
            mine = kkt_residual(box_model, a, load, 1.0, grad=grad)
            # reference LP over (gamma, Gamma)
            m = len(a)
            c = np.r_[a, 1.0 - a @ w]
            A_eq = np.hstack([-np.eye(m), w[:, None]])
            lp = sopt.linprog(
                c, A_eq=A_eq, b_eq=-grad, bounds=[(0, None)] * (m + 1),
                method="highs",
            )
            assert lp.status == 0
            assert mine == pytest.approx(lp.fun, rel=1e-9, abs=1e-12)

    def test_infeasible_design_rejected(self, box_model):
        load = random_box_load(box_model, seed=8)
        a = np.full(box_model.n_elems, 10.0)  # violates the mass bound
        with pytest.raises(ValueError):
            kkt_residual(box_model, a, load, 1.0)
