"""Sampling conventions, interlacing and the exact eigenvalue densities."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from bordered_gue import ensemble as en
from bordered_gue.ensemble import EnsembleParams
from bordered_gue.errors import InvalidParameter
from bordered_gue.experiments import sample_spectra


class TestParams:
    @pytest.mark.parametrize("kw", [dict(n=0), dict(n=3, r=-1), dict(n=3, sigma=0.0),
                                    dict(n=3, sigma=-1.0), dict(n=3, mu=float("nan"))])
    def test_rejects(self, kw):
        with pytest.raises(InvalidParameter):
            EnsembleParams(**kw)

    def test_dim(self):
        assert EnsembleParams(5, 3).dim == 8


class TestSampling:
    def test_one_by_one_variance(self):
        rng = np.random.default_rng(1)
        x = en.sample_gue(1, rng, 10**6)[..., 0, 0].real
        assert np.var(x) == pytest.approx(0.5, abs=0.01)

    def test_off_diagonal_variance(self):
        rng = np.random.default_rng(2)
        x = en.sample_gue(2, rng, 10**6)[..., 0, 1]
        assert np.var(x.real) == pytest.approx(0.25, abs=0.01)
        assert np.var(x.imag) == pytest.approx(0.25, abs=0.01)

    def test_hermitian_exactly(self):
        rng = np.random.default_rng(3)
        m = en.sample_bordered(EnsembleParams(5, 2, 0.4, 1.3), rng, 20)
        assert np.array_equal(m, np.conj(np.swapaxes(m, -1, -2)))

    def test_border_trace_variance(self):
        # a GUE(1) core bordered with mu=0, sigma=1 is a 2x2 GUE: Tr has variance 2 * 1/2 = 1
        rng = np.random.default_rng(4)
        m = en.border_once(en.sample_gue(1, rng, 10**6), 0.0, 1.0, rng)
        tr = np.trace(m, axis1=-2, axis2=-1).real
        assert np.var(tr) == pytest.approx(1.0, abs=0.02)

    def test_border_of_zero_core(self):
        # only the new corner carries variance when the core is [0]
        rng = np.random.default_rng(5)
        m = en.border_once(np.zeros((10**6, 1, 1), complex), 0.0, 1.0, rng)
        tr = np.trace(m, axis1=-2, axis2=-1).real
        assert np.var(tr) == pytest.approx(0.5, abs=0.01)

    def test_border_layout(self):
        rng = np.random.default_rng(6)
        core = en.sample_gue(3, rng)
        m = en.border_once(core, 2.0, 0.5, rng)
        assert np.array_equal(m[1:, 1:], core)
        assert m[0, 0].imag == 0.0

    def test_r0_is_gue(self):
        a = en.sample_bordered(EnsembleParams(4, 0), np.random.default_rng(7), 3)
        b = en.sample_gue(4, np.random.default_rng(7), 3)
        assert np.array_equal(a, b)

    @given(st.integers(1, 8), st.floats(-3, 3), st.floats(0.2, 3), st.integers(0, 10**6))
    def test_interlacing(self, n, mu, sigma, seed):
        rng = np.random.default_rng(seed)
        core = en.sample_gue(n, rng)
        m = en.border_once(core, mu, sigma, rng)
        lam, a = en.eigenvalues(m), en.eigenvalues(core)
        assert np.all(lam[:-1] >= a - 1e-12) and np.all(a >= lam[1:] - 1e-12)

    def test_semicircle_density(self):
        n = 50
        lam = sample_spectra(EnsembleParams(n, 0), 1000, seed=8).ravel()
        edges = np.linspace(-11, 11, 45)
        hist, _ = np.histogram(lam, edges, density=True)
        from bordered_gue.edge import semicircle
        mid = 0.5 * (edges[1:] + edges[:-1])
        assert np.max(np.abs(hist - semicircle(n, mid) / n)) <= 0.05

    def test_sigma1_mu0_is_bigger_gue(self):
        x = sample_spectra(EnsembleParams(2, 1, 0.0, 1.0), 10**5, seed=9)
        y = sample_spectra(EnsembleParams(3, 0), 10**5, seed=10)
        for j in range(3):
            assert stats.ks_2samp(x[:, j], y[:, j]).pvalue > 0.01

    def test_seeded_reproducible(self):
        p = EnsembleParams(4, 1, 0.3, 1.1, seed=12)
        assert np.array_equal(sample_spectra(p, 2500), sample_spectra(p, 2500))
        assert np.array_equal(sample_spectra(p, 2500, threads=1), sample_spectra(p, 2500, threads=3))


class TestConditionalDensity:
    def test_zero_off_interlacing(self):
        assert en.joint_pdf_r1([0.0, 1.0], [2.0], 0.0, 1.0) == 0.0
        assert en.joint_pdf_r1([3.0, 2.5], [2.0], 0.0, 1.0) == 0.0

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(13)
        a = np.array([1.0, -0.5])
        lam = np.sort(rng.uniform(-3, 3, size=(50, 3)), axis=1)[:, ::-1]
        batch = en.joint_pdf_r1_batch(lam, a, 0.4, 0.9)
        single = [en.joint_pdf_r1(row, a, 0.4, 0.9) for row in lam]
        np.testing.assert_allclose(batch, single, rtol=1e-13, atol=0)

    @pytest.mark.parametrize("a0,mu,sigma", [(0.3, 0.5, 1.1), (-1.0, 2.0, 0.6)])
    def test_conditional_normalized(self, a0, mu, sigma):
        r = abs(a0) + abs(mu) + 12 * sigma + 6
        val, _ = integrate.dblquad(lambda l1, l0: en.joint_pdf_r1([l0, l1], [a0], mu, sigma),
                                   a0, a0 + r, a0 - r, a0, epsabs=1e-12, epsrel=1e-11)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_composed_with_core_law(self):
        # the N=1 bordered density is the conditional density times the 1x1 GUE law
        mu, sigma = 0.5, 1.1
        val, _ = integrate.dblquad(lambda l1, l0: en.joint_pdf_rborder(np.array([l0, l1]), 1, 1, mu, sigma),
                                   -16, 16, -16, lambda l0: l0, epsabs=1e-12, epsrel=1e-11)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestBorderedDensity:
    def test_gue_density_normalized(self):
        v, _ = integrate.dblquad(lambda y, x: en.gue_ordered_pdf([x, y]), -9, 9, -9, lambda x: x,
                                 epsabs=1e-12)
        assert v == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (0.7, 1.4), (-0.3, 0.6)])
    def test_no_core_two_borders(self, mu, sigma):
        # two borderings of nothing give sigma * GUE(2) + mu
        for lam in ([1.2, -0.4], [0.9, 0.1], [2.0, -1.5]):
            lam = np.array(lam)
            want = en.gue_ordered_pdf((lam - mu) / sigma) / sigma ** 2
            assert en.joint_pdf_rborder(lam, 0, 2, mu, sigma) == pytest.approx(want, rel=1e-9)

    @pytest.mark.parametrize("lam", [[1.0, -0.2], [0.4, 0.1], [2.1, -1.7], [0.0, -0.9], [1.5, 1.2]])
    def test_single_border_is_marginal(self, lam):
        mu, sigma = 0.6, 1.3
        want, _ = integrate.quad(lambda a: en.joint_pdf_r1(lam, [a], mu, sigma) * en.gue_ordered_pdf([a]),
                                 lam[1], lam[0], epsabs=1e-14, epsrel=1e-12)
        got = en.joint_pdf_rborder(np.array(lam), 1, 1, mu, sigma)
        assert got == pytest.approx(want, rel=1e-8)

    def test_polynomial_family_is_immaterial(self):
        lam = np.array([2.0, 0.7, -0.1, -1.6])
        a = en.joint_pdf_rborder(lam, 2, 2, 0.3, 0.8, "monomial")
        b = en.joint_pdf_rborder(lam, 2, 2, 0.3, 0.8, "hermite")
        assert a == pytest.approx(b, rel=1e-9)

    def test_unit_variance_form_proportional(self):
        pts = [np.array(p) for p in ([2.0, 0.5, -1.0], [1.0, 0.2, -0.3], [3.0, 1.0, -2.0])]
        ratios = [en.joint_pdf_rborder(p, 2, 1, 1.0, 1.0) / en.unit_variance_form(p, 2, 1, 1.0)
                  for p in pts]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)

    def test_unordered_is_zero(self):
        assert en.joint_pdf_rborder(np.array([0.0, 1.0]), 1, 1, 0.0, 1.0) == 0.0
