"""Kernel paths: traces, projection property, cross-path agreement, Gram structure."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bordered_gue import coefficients as co
from bordered_gue import kernel as K
from bordered_gue import specfun
from bordered_gue.ensemble import joint_pdf_rborder
from bordered_gue.errors import DivergenceDetected, InvalidParameter, UnsupportedParameter
from bordered_gue.kernel import KernelSpec


def gl(lo, hi, panels=24, m=40):
    e = np.linspace(lo, hi, panels + 1)
    t, w = np.polynomial.legendre.leggauss(m)
    x = np.concatenate([0.5 * (b - a) * t + 0.5 * (a + b) for a, b in zip(e[:-1], e[1:])])
    ww = np.concatenate([0.5 * (b - a) * w for a, b in zip(e[:-1], e[1:])])
    return x, ww


X, W = gl(-30, 30)


def trace(spec):
    return float(np.sum(W * K.density(spec, X)))


class TestSpecValidation:
    def test_divergent_variance(self):
        with pytest.raises(DivergenceDetected):
            KernelSpec(5, 0.0, 2.5, "general")
        with pytest.raises(DivergenceDetected):
            KernelSpec(5, 0.0, 2.0, "mu0")

    def test_unit_variance_needs_sigma1_path(self):
        with pytest.raises(UnsupportedParameter):
            KernelSpec(5, 0.3, 1.0, "general")

    @pytest.mark.parametrize("kw", [dict(path="sigma1", sigma2=1.2), dict(path="mu0", mu=0.1),
                                    dict(path="gue", mu=0.2), dict(path="nope"), dict(sigma2=0.0),
                                    dict(eps_tail=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParameter):
            KernelSpec(4, **{"mu": 0.0, "sigma2": 1.0, **kw})

    def test_size(self):
        assert KernelSpec(6).size == 7


class TestGUEKernel:
    def test_one_point(self):
        x, y = 0.3, -1.1
        want = math.exp(-(x * x + y * y) / 2) / math.sqrt(math.pi)
        assert K.kernel_gue(1, x, y) == pytest.approx(want, rel=1e-14)

    def test_trace(self):
        assert float(np.sum(W * K.kernel_gue(10, X, X))) == pytest.approx(10, abs=1e-8)

    def test_projection(self):
        g = np.linspace(-2, 2, 5)
        lhs = (K.kernel_gue(8, g[:, None], X[None, :]) * W) @ K.kernel_gue(8, X[:, None], g[None, :])
        np.testing.assert_allclose(lhs, K.kernel_gue(8, g[:, None], g[None, :]), atol=1e-8)


class TestTraces:
    @pytest.mark.parametrize("spec", [
        KernelSpec(6, 0.7, 1.5, "general"), KernelSpec(6, 1.0, 1.0, "sigma1"),
        KernelSpec(6, 0.0, 1.5, "mu0"), KernelSpec(7, 0.0, 0.6, "mu0"),
        KernelSpec(3, -1.4, 0.3, "general"), KernelSpec(1, 0.5, 1.9, "general"),
        KernelSpec(10, 0.0, 1.0, "gue"), KernelSpec(9, -2.0, 1.0, "sigma1")])
    def test_trace_is_size(self, spec):
        assert trace(spec) == pytest.approx(spec.size, abs=1e-6)

    @given(st.integers(1, 8), st.floats(-1.5, 1.5), st.floats(0.2, 1.85).filter(lambda v: abs(v - 1) > 0.01))
    def test_trace_property(self, n, mu, s2):
        assert trace(KernelSpec(n, mu, s2)) == pytest.approx(n + 1, abs=1e-6)

    @given(st.integers(1, 8), st.floats(-2, 2), st.floats(0.2, 1.9).filter(lambda v: abs(v - 1) > 0.01))
    def test_density_nonnegative(self, n, mu, s2):
        # the correction sums cancel from coefficients that may peak far above O(1),
        # so the floor is the rounding bound eps * sum |terms|
        spec = KernelSpec(n, mu, s2)
        x = np.linspace(-8, 8, 81)
        exp = K.expansion(spec)
        px = specfun.hermite_functions(n, x)
        py = np.abs(specfun.hermite_functions(exp.p_last, x)[n - 1:])
        scale = np.abs(px[n - 1]) * (np.abs(exp.a) @ py) + np.abs(px[n]) * (np.abs(exp.b) @ py) + 1.0
        assert np.all(K.density(spec, x) >= -1e-13 * scale)


class TestReproducing:
    @pytest.mark.parametrize("spec", [KernelSpec(8, 0.7, 1.5), KernelSpec(8, 1.0, 1.0, "sigma1"),
                                      KernelSpec(5, 0.0, 0.5, "mu0")])
    def test_projection(self, spec):
        g = np.linspace(-2, 2, 5)
        lhs = (K.evaluate(spec, g[:, None], X[None, :]) * W) @ K.evaluate(spec, X[:, None], g[None, :])
        np.testing.assert_allclose(lhs, K.evaluate(spec, g[:, None], g[None, :]), atol=1e-6)


class TestCrossPath:
    pts = np.random.default_rng(0).uniform(-4, 4, size=(2, 10))

    @pytest.mark.parametrize("n,s2", [(6, 1.5), (7, 0.6), (1, 1.3), (12, 1.8)])
    def test_mu0_equals_general(self, n, s2):
        a = K.evaluate(KernelSpec(n, 0.0, s2, "mu0"), *self.pts)
        b = K.evaluate(KernelSpec(n, 0.0, s2, "general"), *self.pts)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_plain_gue_point(self):
        g = np.linspace(-4, 4, 9)
        np.testing.assert_allclose(K.kernel_bordered(KernelSpec(8), g[:, None], g[None, :]),
                                   K.kernel_gue(9, g[:, None], g[None, :]), atol=1e-10)
        assert K.expansion(KernelSpec(8)).route == "gue"

    def test_table_route(self):
        spec = KernelSpec(6, 0.7, 1.5)
        tab = co.build_coeffs(0.7, math.sqrt(1.5), 400)
        g = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(K.kernel_bordered(spec, g[:, None], g[None, :], coeffs=tab),
                                   K.kernel_bordered(spec, g[:, None], g[None, :]), atol=1e-12)

    def test_rescaling_invariance(self):
        spec = KernelSpec(5, 0.4, 0.7)
        tab = co.build_coeffs(0.4, math.sqrt(0.7), 300)
        g = np.linspace(-3, 3, 7)
        a = K.kernel_bordered(spec, g[:, None], g[None, :], coeffs=tab)
        b = K.kernel_bordered(spec, g[:, None], g[None, :], coeffs=tab.rescaled(-7.5, 0.02))
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))

    def test_sigma1_continuity(self):
        g = np.linspace(-4, 4, 17)
        ref = K.evaluate(KernelSpec(8, 0.5, 1.0, "sigma1"), g[:, None], g[None, :])
        diffs = []
        for eps in (1e-4, 1e-5):
            near = K.evaluate(KernelSpec(8, 0.5, 1.0 + eps), g[:, None], g[None, :])
            d = np.max(np.abs(near - ref)) / np.max(np.abs(ref))
            assert d <= 1e-3
            diffs.append(d)
        # the gap is first order in sigma^2 - 1, i.e. genuine continuity
        assert diffs[0] / diffs[1] == pytest.approx(10, rel=0.05)

    def test_sigma1_dual_forms(self):
        a = K.kernel_sigma1(6, 1.2, 0.3, -0.5, form="tail")
        b = K.kernel_sigma1(6, 1.2, 0.3, -0.5, form="complement")
        assert a == pytest.approx(b, rel=1e-8)

    def test_sigma1_contour(self):
        g = np.linspace(-3, 3, 7)
        a = K.kernel_sigma1(4, 0.8, g[:, None], g[None, :])
        b = K.kernel_sigma1_contour(4, 0.8, g[:, None], g[None, :])
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_sigma1_negative_mu(self):
        g = np.linspace(-3, 3, 7)
        a = K.kernel_sigma1(5, -0.9, g[:, None], g[None, :])
        b = K.kernel_sigma1(5, -0.9, g[:, None], g[None, :], form="complement")
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_sigma1_is_limit_of_mu0(self):
        assert K.kernel_sigma1(4, 0.0, 0.2, 0.4) == pytest.approx(K.kernel_gue(5, 0.2, 0.4))


class TestDensityFromJointPdf:
    def test_single_eigenvalue_density(self):
        # N = 1: marginal of the exact two-eigenvalue density equals K(x, x)
        from scipy import integrate
        mu, sigma = 0.6, 1.2
        spec = KernelSpec(1, mu, sigma ** 2)
        for x in (-1.3, 0.2, 1.7):
            lo, _ = integrate.quad(lambda y: joint_pdf_rborder(np.array([x, y]), 1, 1, mu, sigma), -20, x,
                                   epsabs=1e-13)
            hi, _ = integrate.quad(lambda y: joint_pdf_rborder(np.array([y, x]), 1, 1, mu, sigma), x, 20,
                                   epsabs=1e-13)
            assert float(K.density(spec, x)) == pytest.approx(lo + hi, rel=1e-8)


class TestCorrelations:
    def test_one_point_is_density(self):
        spec = KernelSpec(5, 0.3, 1.4)
        assert K.correlations(spec, [0.7]) == pytest.approx(float(K.density(spec, 0.7)))

    def test_coincident_points_vanish(self):
        spec = KernelSpec(5, 0.3, 1.4)
        assert abs(K.correlations(spec, [0.4, 0.4])) <= 1e-12

    def test_empty_rejected(self):
        with pytest.raises(InvalidParameter):
            K.correlations(KernelSpec(3, 0.3, 1.4), [])


class TestGram:
    def test_structure(self):
        rep = K.gram_check(KernelSpec(4, 0.5, 1.3))
        assert rep.off_block_max <= 1e-8
        assert rep.diag_rel_err <= 1e-8
        assert rep.block_rel_err <= 1e-8
        assert rep.ok()

    def test_sigma_below_one(self):
        assert K.gram_check(KernelSpec(3, -0.4, 0.7)).ok()


def test_large_coefficient_peak_matches_joint_pdf():
    # coefficients reach ~1e12 here before decaying; the tail must be cut absolutely
    from scipy import integrate
    mu, s2, x = 2.0, 1.875, -4.2
    lo, _ = integrate.quad(lambda y: joint_pdf_rborder(np.array([x, y]), 1, 1, mu, math.sqrt(s2)), -40, x,
                           epsabs=1e-300)
    hi, _ = integrate.quad(lambda y: joint_pdf_rborder(np.array([y, x]), 1, 1, mu, math.sqrt(s2)), x, 40,
                           epsabs=1e-300)
    for eps in (1e-6, 1e-12):
        assert float(K.density(KernelSpec(1, mu, s2, eps_tail=eps), x)) == pytest.approx(lo + hi, abs=1e-7)
