"""The acceptance suite: one function per criterion, each returning a :class:`CriterionResult`.

``run_suite("full")`` uses the contract sizes; ``"quick"`` shrinks the Monte
Carlo work (same tolerances) for a fast smoke run.  Everything is deterministic
for a given base seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import coefficients as co
from . import edge, ensemble, experiments, kernel, specfun
from .ensemble import EnsembleParams
from .kernel import KernelSpec

SIZES = {
    "full": dict(lemma_draws=100_000, cond_draws=100_000, phase_n=400, phase_draws=400,
                 edge_n=200, edge_draws=10_000, control_draws=100_000),
    "quick": dict(lemma_draws=20_000, cond_draws=20_000, phase_n=200, phase_draws=200,
                  edge_n=100, edge_draws=2_000, control_draws=20_000),
}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {flag}  {self.title}: {self.summary}  [{self.seconds:.1f} s]"


def _gl(lo, hi, m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _panels(lo, hi, panels, m=40):
    pts, wts = zip(*(_gl(a, b, m) for a, b in zip(np.linspace(lo, hi, panels + 1)[:-1],
                                                  np.linspace(lo, hi, panels + 1)[1:])))
    return np.concatenate(pts), np.concatenate(wts)


def _reach(spec: KernelSpec) -> float:
    return math.sqrt(2.0 * spec.size) + abs(spec.mu) + 10.0 * max(1.0, spec.sigma) + 8.0


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


# -- 1 ------------------------------------------------------------------------------

def criterion_1(size, seed=0, threads=None):
    params = EnsembleParams(3, 1, 2.0, 1.3, seed)
    t = time.perf_counter()
    rep = experiments.lemma_equivalence_experiment(params, size["lemma_draws"], threads=threads)
    dt = time.perf_counter() - t
    pmin = rep.stats["p_min_observed"]
    ok = pmin > 0.01 and dt < 60.0
    return CriterionResult(1, "bordered GUE vs bordered diagonal core", ok,
                           f"min KS p = {pmin:.3g} (> 0.01), runtime {dt:.1f} s (< 60 s)",
                           {"p_values": rep.stats["p_values"], "runtime": dt})


# -- 2 ------------------------------------------------------------------------------

def _conditional_mass(a0, mu, sigma):
    reach = abs(a0) + abs(mu) + 12.0 * sigma + 6.0
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)

    def inner(l0):
        v, _ = specfun.quad(lambda l1: ensemble.joint_pdf_r1([l0, l1], [a0], mu, sigma),
                            a0 - reach, a0, points=[mu], **opts)
        return v

    v, _ = specfun.quad(inner, a0, a0 + reach, points=[max(mu, a0)], **opts)
    return v


def _full_mass(mu, sigma):
    reach = abs(mu) + 12.0 * max(sigma, 1.0) + 6.0
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)

    def inner(l0):
        v, _ = specfun.quad(lambda l1: ensemble.joint_pdf_rborder([l0, l1], 1, 1, mu, sigma),
                            -reach, l0, **opts)
        return v

    v, _ = specfun.quad(inner, -reach, reach, points=[0.0, mu], **opts)
    return v


def criterion_2(size, seed=0, threads=None):
    a, mu, sigma = [0.3], 0.5, 1.1
    rep = experiments.conditional_pdf_experiment(a, mu, sigma, size["cond_draws"], seed + 2,
                                                 threads=threads)
    cond = _conditional_mass(a[0], mu, sigma)
    full = _full_mass(mu, sigma)
    p = rep.stats["p_value"]
    ok = p > 0.01 and abs(cond - 1.0) <= 1e-8 and abs(full - 1.0) <= 1e-8
    return CriterionResult(2, "N=1 conditional density", ok,
                           f"chi2 p = {p:.3g} (> 0.01), conditional mass - 1 = {cond - 1:.1e}, "
                           f"full mass - 1 = {full - 1:.1e} (1e-8)",
                           {"p_value": p, "conditional_mass": cond, "full_mass": full})


# -- 3, 4 ---------------------------------------------------------------------------

TRACE_SPECS = (
    KernelSpec(10, 0.7, 1.5, "general"),
    KernelSpec(10, 1.0, 1.0, "sigma1"),
    KernelSpec(10, 0.0, 0.6, "mu0"),
    KernelSpec(10, 0.0, 1.0, "gue"),
)


def kernel_trace(spec: KernelSpec) -> float:
    r = _reach(spec)
    x, w = _panels(-r, r, 24)
    return float(np.sum(w * kernel.density(spec, x)))


def criterion_3(size=None, seed=0, threads=None):
    errs = {s.path: abs(kernel_trace(s) - s.size) for s in TRACE_SPECS}
    worst = max(errs.values())
    return CriterionResult(3, "kernel trace equals N+1", worst <= 1e-6,
                           f"max |trace - (N+1)| = {worst:.1e} over {len(errs)} paths (1e-6)",
                           {"errors": errs})


def reproducing_error(spec: KernelSpec, grid=np.linspace(-2.0, 2.0, 5)) -> float:
    r = _reach(spec)
    z, w = _panels(-r, r, 24)
    kxz = kernel.evaluate(spec, grid[:, None], z[None, :])
    kzy = kernel.evaluate(spec, z[:, None], grid[None, :])
    lhs = (kxz * w) @ kzy
    rhs = kernel.evaluate(spec, grid[:, None], grid[None, :])
    return float(np.max(np.abs(lhs - rhs)))


def criterion_4(size=None, seed=0, threads=None):
    specs = (KernelSpec(8, 0.7, 1.5, "general"), KernelSpec(8, 1.0, 1.0, "sigma1"))
    errs = {s.path: reproducing_error(s) for s in specs}
    worst = max(errs.values())
    return CriterionResult(4, "reproducing property", worst <= 1e-6,
                           f"max |K*K - K| = {worst:.1e} on 5x5 grid (1e-6)", {"errors": errs})


# -- 5 ------------------------------------------------------------------------------

def criterion_5(size=None, seed=0, threads=None):
    rng = np.random.default_rng(seed + 5)
    pts = rng.uniform(-4.0, 4.0, size=(2, 10))
    m = {}
    m["mu0_vs_general"] = max(
        float(np.max(np.abs(kernel.evaluate(KernelSpec(n, 0.0, s2, "mu0"), *pts)
                            - kernel.evaluate(KernelSpec(n, 0.0, s2, "general"), *pts))))
        for n, s2 in ((6, 1.5), (7, 0.6)))

    g = np.linspace(-4.0, 4.0, 17)
    gx, gy = g[:, None], g[None, :]
    n, mu, eps = 8, 0.5, 1e-4
    ref = kernel.evaluate(KernelSpec(n, mu, 1.0, "sigma1"), gx, gy)
    sup, point = 0.0, 0.0
    for s2 in (1.0 - eps, 1.0 + eps):
        d = np.abs(kernel.evaluate(KernelSpec(n, mu, s2, "general"), gx, gy) - ref)
        sup = max(sup, float(np.max(d) / np.max(np.abs(ref))))
        point = max(point, float(np.max(d / np.abs(ref))))
    m["sigma1_continuity_sup_rel"] = sup
    m["sigma1_continuity_pointwise_rel"] = point

    m["propagated_vs_gue"] = float(np.max(np.abs(
        kernel.kernel_bordered(KernelSpec(n, 0.0, 1.0, "general"), gx, gy)
        - kernel.kernel_gue(n + 1, gx, gy))))

    mu = 1.0
    tail = kernel.kernel_sigma1(n, mu, gx, gy, form="tail")
    comp = kernel.kernel_sigma1(n, mu, gx, gy, form="complement")
    cont = kernel.kernel_sigma1_contour(n, mu, gx, gy)
    m["dual_forms"] = float(np.max(np.abs(tail - comp)))
    m["contour"] = float(np.max(np.abs(tail - cont)))

    tol = {"mu0_vs_general": 1e-9, "sigma1_continuity_sup_rel": 1e-3,
           "propagated_vs_gue": 1e-10, "dual_forms": 1e-8, "contour": 1e-8}
    ok = all(m[k] <= v for k, v in tol.items())
    return CriterionResult(
        5, "path coherence", ok,
        f"mu0/general {m['mu0_vs_general']:.1e}, sigma1 continuity {sup:.1e} sup-relative "
        f"(pointwise {point:.1e}), GUE {m['propagated_vs_gue']:.1e}, "
        f"dual {m['dual_forms']:.1e}, contour {m['contour']:.1e}", m)


# -- 6 ------------------------------------------------------------------------------

def criterion_6(size=None, seed=0, threads=None):
    m = {}
    seeds_err = 0.0
    for mu, sig in ((0.5, math.sqrt(0.8)), (0.3, math.sqrt(1.5))):
        tab = co.build_coeffs(mu, sig, 6)
        for p in range(7):
            a, b = co.direct_quadrature(mu, sig, p)
            seeds_err = max(seeds_err, _rel(tab.tilde_alpha[p], a), _rel(tab.tilde_beta[p], b))
    m["recurrence_vs_quadrature"] = seeds_err

    closed, parity = 0.0, True
    for sig in (math.sqrt(0.6), math.sqrt(1.5)):
        tab = co.build_coeffs(0.0, sig, 20)
        ta, tb = tab.tilde_alpha, tab.tilde_beta
        ca = np.array([co.mu0_tilde_alpha(p, sig) for p in range(21)])
        cb = np.array([co.mu0_tilde_beta(p, sig) for p in range(21)])
        odd = np.arange(21) % 2 == 1
        parity &= bool(np.all(ta[~odd] == 0.0) and np.all(tb[odd] == 0.0))
        closed = max(closed, _rel(ta[odd], ca[odd]), _rel(tb[~odd], cb[~odd]))
    m["mu0_closed_forms"] = closed
    m["parity_exact"] = parity

    rep = kernel.gram_check(KernelSpec(4, 0.5, 1.3, "general"))
    m["gram_off_block"] = rep.off_block_max
    m["gram_block"] = rep.block_rel_err
    ok = seeds_err <= 1e-8 and closed <= 1e-10 and parity and rep.off_block_max <= 1e-8
    return CriterionResult(
        6, "coefficient suite", ok,
        f"seeds {seeds_err:.1e} (1e-8), mu=0 closed forms {closed:.1e} (1e-10), "
        f"parity exact {parity}, Gram off-block {rep.off_block_max:.1e} (1e-8)", m)


# -- 7 ------------------------------------------------------------------------------

def criterion_7(size, seed=0, threads=None):
    n, draws = size["phase_n"], size["phase_draws"]
    t = time.perf_counter()
    rows = experiments.phase_scan([(0.0, 3.0), (2.0, 1.0), (0.0, 1.5)], n, draws, seed + 7,
                                  threads=threads)
    dt = time.perf_counter() - t
    r1, r2, r3 = rows
    e1 = abs(r1.mean_max / r1.predicted_max - 1.0)
    e2 = abs(r2.mean_max / r2.predicted_max - 1.0)
    e3 = abs(r3.mean_max - math.sqrt(2.0 * n))
    bound = 5.0 * n ** (-1.0 / 6.0)
    ok = e1 <= 0.03 and e2 <= 0.03 and e3 <= bound and dt < 600.0
    return CriterionResult(
        7, "phase diagram", ok,
        f"(0,3) {100 * e1:.2f}% (3%), (2,1) {100 * e2:.2f}% (3%), "
        f"(0,1.5) |mean - sqrt(2N)| = {e3:.3f} (<= {bound:.3f}), runtime {dt:.0f} s",
        {"rel_err_c0_s3": e1, "rel_err_c2_s1": e2, "abs_err_c0_s1.5": e3, "runtime": dt,
         "rows": [r.__dict__ for r in rows]})


# -- 8 ------------------------------------------------------------------------------

CONVERGENCE_CASES = (
    ("sigma1", 0.3, -0.4, 0.5, {}),
    ("mu0", 0.3, -0.4, 1.0, {}),
    ("general", 0.3, -0.4, 1.0, {"c_hat": 1.0, "s1": 0.5}),
)


def criterion_8(size, seed=0, threads=None):
    n, draws = size["edge_n"], size["edge_draws"]
    r1 = experiments.edge_fluctuation_experiment("sigma1", n, 0.0, draws, seed + 81, tol=0.05,
                                                 threads=threads)
    r2 = experiments.edge_fluctuation_experiment("mu0", n, 1.0, draws, seed + 82, tol=0.07,
                                                 threads=threads)
    tables = [edge.finite_to_edge_convergence(p, X, Y, s, (50, 100, 200), **kw)
              for p, X, Y, s, kw in CONVERGENCE_CASES]
    mono = [t.decreasing for t in tables]
    ks1, ks2 = r1.stats["ks"], r2.stats["ks"]
    ok = ks1 <= 0.05 and ks2 <= 0.07 and ks2 <= 2.0 * ks1 and all(mono)
    devs = ", ".join(f"{t.path} " + "/".join(f"{d:.1e}" for d in t.deviations) for t in tables)
    return CriterionResult(
        8, "edge universality", ok,
        f"KS sigma1 s=0 {ks1:.4f} (0.05), mu0 s=1 {ks2:.4f} (0.07, <= 2x sigma1); "
        f"deviations {devs}",
        {"ks_sigma1": ks1, "ks_mu0": ks2,
         "deviations": {t.path: t.deviations for t in tables}, "monotone": mono})


# -- 9 ------------------------------------------------------------------------------

def criterion_9(size=None, seed=0, threads=None):
    c, s2, n = 1.0, 0.8, 2000
    lim = co.GammaLimits(c, s2)
    worst = 0.0
    for which in (1, 2):
        for p in range(11):
            worst = max(worst, abs(co.gamma_finite(c, s2, n, p, which) - co.gamma_p(lim, p, which)))
    return CriterionResult(9, "gamma limits", worst <= 1e-2,
                           f"max |gamma_finite - limit| = {worst:.2e} at N=2000, p <= 10 (1e-2)",
                           {"max_error": worst})


# -- 10 -----------------------------------------------------------------------------

def airy_ode_residual(x=np.linspace(-10.0, 5.0, 301), h=1e-3, route="production") -> float:
    """``max |Ai'' - x Ai|`` with ``Ai''`` from a five-point difference of ``Ai'``."""
    def dai(t):
        if route == "production":
            return specfun.airy_ai(t)[1]
        return np.array([specfun.airy_series(float(v))[1] for v in np.atleast_1d(t)])

    def ai(t):
        if route == "production":
            return specfun.airy_ai(t)[0]
        return np.array([specfun.airy_series(float(v))[0] for v in np.atleast_1d(t)])

    d2 = (-dai(x + 2 * h) + 8 * dai(x + h) - 8 * dai(x - h) + dai(x - 2 * h)) / (12 * h)
    return float(np.max(np.abs(d2 - x * ai(x))))


def plancherel_rotach_errors(ns=(100, 200, 400), u=np.linspace(-3.0, 3.0, 61)) -> list[float]:
    return [float(np.max(np.abs(specfun.plancherel_rotach(n, u) - specfun.plancherel_rotach_limit(n, u))))
            for n in ns]


def criterion_10(size=None, seed=0, threads=None):
    # the Maclaurin oracle cancels badly below x = -6, so it is checked on [-6, 5]
    ode = max(airy_ode_residual(route="production"),
              airy_ode_residual(np.linspace(-6.0, 5.0, 221), route="series"))
    lap = {s: abs(edge.laplace_airy(s) / math.exp(s ** 3 / 3.0) - 1.0) for s in (0.0, 0.5, 1.0, 2.0)}
    pr = plancherel_rotach_errors()
    mono = all(b < a for a, b in zip(pr, pr[1:]))
    worst_lap = max(lap.values())
    ok = ode <= 1e-9 and worst_lap <= 1e-6 and mono
    return CriterionResult(
        10, "special functions", ok,
        f"Airy ODE residual {ode:.1e} (1e-9), Laplace identity {worst_lap:.1e} (1e-6), "
        f"Plancherel-Rotach " + "/".join(f"{e:.2e}" for e in pr),
        {"ode_residual": ode, "laplace": lap, "plancherel_rotach": pr})


# -- 11 -----------------------------------------------------------------------------

def criterion_11(size, seed=0, threads=None):
    params = EnsembleParams(10, 1, 0.0, math.sqrt(1.5), seed + 11)
    draws = size["control_draws"]
    wrong = experiments.density_experiment(params, draws, kernel_spec=KernelSpec(9, 0.0, 1.5),
                                           threads=threads)
    right = experiments.density_experiment(params, draws, threads=threads)
    pw, pr = wrong.stats["p_value"], right.stats["p_value"]
    return CriterionResult(11, "negative control", pw < 1e-6,
                           f"mismatched kernel p = {pw:.1e} (< 1e-6); matched kernel p = {pr:.3g}",
                           {"p_mismatched": pw, "p_matched": pr})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11)


def run_criterion(k: int, mode: str = "full", seed: int = 0, threads=None) -> CriterionResult:
    t = time.perf_counter()
    res = CRITERIA[k - 1](SIZES[mode], seed, threads)
    res.seconds = time.perf_counter() - t
    return res


def run_suite(mode: str = "full", seed: int = 0, threads=None, only=None, echo=None) -> list[CriterionResult]:
    out = []
    for k in (only or range(1, len(CRITERIA) + 1)):
        res = run_criterion(k, mode, seed, threads)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
