"""Coefficient tables, reduced coefficients and their large-N limits."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bordered_gue import coefficients as co
from bordered_gue import specfun
from bordered_gue.errors import DivergenceDetected, InvalidParameter, UnsupportedParameter

SQRT_PI = math.sqrt(math.pi)


class TestBuildCoeffs:
    def test_mu0_leading_values(self):
        sig = math.sqrt(1.5)
        t = co.build_coeffs(0.0, sig, 4)
        assert t.tilde_beta[0] == pytest.approx(SQRT_PI * sig, rel=1e-12)
        assert t.tilde_alpha[1] == pytest.approx(SQRT_PI * sig ** 2, rel=1e-12)
        assert t.tilde_alpha[0] == 0.0

    @pytest.mark.parametrize("s2", [0.5, 1.5, 1.9])
    def test_mu0_closed_forms(self, s2):
        sig = math.sqrt(s2)
        t = co.build_coeffs(0.0, sig, 20)
        for p in range(21):
            if p % 2:
                assert t.tilde_alpha[p] == pytest.approx(co.mu0_tilde_alpha(p, sig), rel=1e-10)
                assert t.tilde_beta[p] == 0.0
            else:
                assert t.tilde_beta[p] == pytest.approx(co.mu0_tilde_beta(p, sig), rel=1e-10)
                assert t.tilde_alpha[p] == 0.0

    @pytest.mark.parametrize("mu,s2", [(0.7, 1.5), (0.5, 0.8), (-1.2, 0.4), (0.3, 1.7)])
    def test_direct_quadrature(self, mu, s2):
        sig = math.sqrt(s2)
        t = co.build_coeffs(mu, sig, 6)
        for p in range(7):
            a, b = co.direct_quadrature(mu, sig, p)
            assert t.tilde_alpha[p] == pytest.approx(a, rel=1e-8)
            assert t.tilde_beta[p] == pytest.approx(b, rel=1e-8)

    @given(st.floats(-2, 2), st.floats(0.3, 1.9).filter(lambda v: abs(v - 1) > 1e-3))
    def test_recurrence_residual(self, mu, s2):
        t = co.build_coeffs(mu, math.sqrt(s2), 30)
        for seq in (t.tilde_alpha, t.tilde_beta):
            for p in range(2, 31):
                res = seq[p] - 2 * mu * seq[p - 1] - 2 * (p - 1) * (s2 - 1) * seq[p - 2]
                running = np.max(np.abs(seq[:p + 1]) * np.exp(-0.5 * specfun.log_hermite_norm(np.arange(p + 1))))
                assert abs(res) <= 1e-10 * running * math.exp(0.5 * specfun.log_hermite_norm(p))

    def test_rescaled(self):
        t = co.build_coeffs(0.4, 0.9, 10)
        r = t.rescaled(3.0, -0.5)
        np.testing.assert_allclose(r.tilde_alpha, 3.0 * t.tilde_alpha, rtol=1e-15)
        np.testing.assert_allclose(r.tilde_beta, -0.5 * t.tilde_beta, rtol=1e-15)

    def test_no_overflow_large_p(self):
        t = co.build_coeffs(3.0, math.sqrt(1.8), 3000)
        a, b = t.normalized()
        assert np.all(np.isfinite(t.a_hat)) and np.all(np.isfinite(t.log_scale))

    def test_rejects(self):
        with pytest.raises(UnsupportedParameter):
            co.build_coeffs(0.3, 1.0, 5)
        with pytest.raises(InvalidParameter):
            co.build_coeffs(0.3, -1.0, 5)
        with pytest.raises(InvalidParameter):
            co.build_coeffs(0.3, 0.5, 1)


class TestClosedForms:
    def test_beta_at_p0(self):
        assert co.closed_form_beta(0.4, 0.8, 0) == pytest.approx(math.exp((0.4 / 0.8) ** 2), rel=1e-15)

    def test_beta_ratio_structure(self):
        # at mu=0 consecutive even terms differ by 2(p-1)(sigma^2-1) in both routes
        sig = math.sqrt(0.5)
        t = co.build_coeffs(0.0, sig, 6)
        p = 4
        r_closed = co.closed_form_beta(0.0, sig, p) / co.closed_form_beta(0.0, sig, p - 2)
        r_rec = t.tilde_beta[p] / t.tilde_beta[p - 2]
        assert r_closed == pytest.approx(r_rec, rel=1e-10)
        assert r_rec == pytest.approx(2 * (p - 1) * (0.5 - 1), rel=1e-12)

    @pytest.mark.parametrize("mu", [0.0, 0.6, -0.9])
    def test_beta_sequence_up_to_global_factor(self, mu):
        sig = math.sqrt(0.5)
        t = co.build_coeffs(mu, sig, 12)
        closed = np.array([co.closed_form_beta(mu, sig, p) for p in range(13)])
        # the printed closed form omits the factor sigma sqrt(pi)
        np.testing.assert_allclose(t.tilde_beta, closed * sig * SQRT_PI, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("mu", [0.5, -0.8])
    def test_alpha_two_solution_form(self, mu):
        sig = math.sqrt(0.6)
        t = co.build_coeffs(mu, sig, 10)
        closed = [co.closed_form_alpha(mu, sig, p, t.tilde_alpha[0]) for p in range(11)]
        np.testing.assert_allclose(t.tilde_alpha, closed, rtol=1e-8, atol=1e-10)

    def test_need_sigma_below_one(self):
        with pytest.raises(UnsupportedParameter):
            co.closed_form_beta(0.1, 1.2, 3)


class TestReduced:
    @pytest.mark.parametrize("n,mu,s2", [(4, 0.5, 1.3), (6, 0.7, 1.5), (5, -0.4, 0.7)])
    def test_table_and_propagation_agree(self, n, mu, s2):
        red = co.reduced_coefficients(n, mu, s2, p_max=n + 40)
        tab = co.build_coeffs(mu, math.sqrt(s2), n + 40).reduced(n)
        np.testing.assert_allclose(tab.c1, red.c1, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(tab.c2, red.c2, rtol=1e-9, atol=1e-12)

    def test_unit_initial_data(self):
        red = co.reduced_coefficients(7, 0.3, 1.4, p_max=20)
        assert (red.c1[0], red.c1[1], red.c2[0], red.c2[1]) == (1.0, 0.0, 0.0, 1.0)

    def test_divergence_detected(self):
        with pytest.raises(DivergenceDetected):
            co.reduced_coefficients(5, 0.0, 2.5, p_max=500, eps_tail=1e-12)

    def test_tail_converges_inside_domain(self):
        red = co.reduced_coefficients(5, 0.2, 1.6, eps_tail=1e-12)
        assert red.p_last < 20 * 5 + 2000
        assert max(abs(red.c1[-1]), abs(red.c2[-1])) < 1e-10


class TestGammaLimits:
    def test_initial_conditions(self):
        lim = co.GammaLimits(1.3, 0.7)
        assert (co.gamma_p(lim, 0, 1), co.gamma_p(lim, 1, 1)) == (1.0, 0.0)
        assert (co.gamma_p(lim, 0, 2), co.gamma_p(lim, 1, 2)) == (0.0, 1.0)

    def test_unit_variance_second_solution(self):
        lim = co.GammaLimits(1.0, 1.0)
        assert (lim.x_plus, lim.x_minus) == (1.0, 0.0)
        for p in range(1, 12):
            assert co.gamma_p(lim, p, 2) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(-3, 3), st.floats(0.05, 3))
    def test_root_identities(self, c, s2):
        lim = co.GammaLimits(c, s2)
        if lim.degenerate:
            return
        assert abs(lim.x_plus + lim.x_minus - c) <= 1e-12 * max(1, abs(c))
        assert abs(lim.x_plus * lim.x_minus - (1 - s2)) <= 1e-12 * max(1, abs(c) ** 2)

    @given(st.floats(-2.5, 2.5), st.floats(0.1, 2.5), st.sampled_from([1, 2]))
    def test_recurrence(self, c, s2, which):
        lim = co.GammaLimits(c, s2)
        if abs(c * c - 4 * (1 - s2)) < 1e-3:
            return
        g = [co.gamma_p(lim, p, which) for p in range(10)]
        for q in range(1, 9):
            want = c * g[q] + (s2 - 1) * g[q - 1]
            assert g[q + 1] == pytest.approx(want, rel=1e-9, abs=1e-9 * (1 + abs(c)) ** q)

    def test_finite_initial_values(self):
        assert co.gamma_finite(1.0, 0.8, 50, 0, 1) == 1.0
        assert co.gamma_finite(1.0, 0.8, 50, 1, 1) == 0.0

    def test_large_n_limit(self):
        lim = co.GammaLimits(1.0, 0.8)
        for which in (1, 2):
            for p in range(11):
                assert abs(co.gamma_finite(1.0, 0.8, 2000, p, which) - co.gamma_p(lim, p, which)) <= 1e-2

    def test_routes_agree(self):
        for p in range(6):
            a = co.gamma_finite(0.5, 0.7, 30, p, 2, route="recurrence")
            b = co.gamma_finite(0.5, 0.7, 30, p, 2, route="table")
            assert a == pytest.approx(b, rel=1e-7, abs=1e-10)

    def test_confluent_rejected(self):
        with pytest.raises(UnsupportedParameter):
            co.gamma_p(co.GammaLimits(1.0, 0.75), 3, 1)
