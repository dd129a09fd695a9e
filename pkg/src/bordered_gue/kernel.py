"""Correlation kernels of the singly bordered GUE.

Every kernel here belongs to an ensemble of ``n + 1`` eigenvalues and so has
trace ``n + 1``.  All non-GUE kernels share the shape

    K(x, y) = sum_{j < n-1} psi_j(x) psi_j(y)
              + psi_{n-1}(x) sum_{p >= n-1} A[p] psi_p(y)
              + psi_n(x)     sum_{p >= n-1} B[p] psi_p(y)

with the Hermite norms folded into ``A`` and ``B``.  The paths differ only in
how they produce ``(A, B)``:

``general``  propagation of the coefficient recurrence (any ``0 < sigma^2 < 2``);
``sigma1``   the explicit unit-variance coefficients ``(2 mu)^(p-n)``;
``mu0``      the explicit parity-split sums at ``mu = 0``;
``gue``      plain GUE of size ``n + 1``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .coefficients import CoeffTable, build_coeffs, reduced_coefficients
from .errors import DivergenceDetected, InvalidParameter, NumericalFailure, UnsupportedParameter

PATHS = ("general", "sigma1", "mu0", "gue")
DEFAULT_EPS_TAIL = 1e-12
_CHUNK = 2048


def default_p_max(n: int) -> int:
    return 20 * n + 20000


@dataclass(frozen=True)
class KernelSpec:
    """Core size ``n``, border parameters and evaluation route."""

    n: int
    mu: float = 0.0
    sigma2: float = 1.0
    path: str = "general"
    eps_tail: float = DEFAULT_EPS_TAIL
    p_max: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameter("n must be an integer >= 1")
        if self.path not in PATHS:
            raise InvalidParameter(f"path must be one of {PATHS}")
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma2)):
            raise InvalidParameter("mu and sigma2 must be finite")
        if not self.sigma2 > 0:
            raise InvalidParameter("sigma2 must be > 0")
        if not self.eps_tail > 0:
            raise InvalidParameter("eps_tail must be > 0")
        if self.p_max is not None and self.p_max < self.n + 1:
            raise InvalidParameter("p_max must exceed n")
        if self.path in ("general", "mu0") and self.sigma2 >= 2.0:
            raise DivergenceDetected(
                f"sigma^2 = {self.sigma2:g} >= 2: the kernel correction sums diverge")
        if self.path == "general" and self.sigma2 == 1.0 and self.mu != 0.0:
            raise UnsupportedParameter("sigma^2 == 1 with mu != 0: use path='sigma1'")
        if self.path == "sigma1" and self.sigma2 != 1.0:
            raise InvalidParameter("path 'sigma1' requires sigma2 == 1")
        if self.path == "mu0" and self.mu != 0.0:
            raise InvalidParameter("path 'mu0' requires mu == 0")
        if self.path == "gue" and (self.mu != 0.0 or self.sigma2 != 1.0):
            raise InvalidParameter("path 'gue' requires mu == 0 and sigma2 == 1")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def size(self) -> int:
        """Number of eigenvalues, equal to the kernel trace."""
        return self.n + 1

    @property
    def resolved_p_max(self) -> int:
        return default_p_max(self.n) if self.p_max is None else int(self.p_max)

    @property
    def is_plain_gue(self) -> bool:
        return self.mu == 0.0 and self.sigma2 == 1.0


@dataclass(frozen=True)
class KernelValue:
    x: float
    y: float
    value: float


@dataclass(frozen=True)
class Expansion:
    """``A[k], B[k]`` multiply ``psi_{n-1+k}(y)``; see the module docstring."""

    n: int
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    route: str = ""

    @property
    def p_last(self) -> int:
        return self.n - 1 + len(self.a) - 1


def _flatten(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return x.ravel(), y.ravel(), x.shape


def _finish(out, shape):
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def kernel_gue(n: int, x, y):
    """``sum_{j=0}^{n-1} psi_j(x) psi_j(y)``, the size-``n`` GUE kernel."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    xf, yf, shape = _flatten(x, y)
    out = np.empty(xf.shape)
    for i in range(0, len(xf), _CHUNK):
        px = specfun.hermite_functions(n - 1, xf[i:i + _CHUNK])
        py = specfun.hermite_functions(n - 1, yf[i:i + _CHUNK])
        out[i:i + _CHUNK] = np.sum(px * py, axis=0)
    return _finish(out, shape)


def _apply(exp: Expansion, x, y):
    n = exp.n
    xf, yf, shape = _flatten(x, y)
    out = np.empty(xf.shape)
    for i in range(0, len(xf), _CHUNK):
        px = specfun.hermite_functions(n, xf[i:i + _CHUNK])
        py = specfun.hermite_functions(exp.p_last, yf[i:i + _CHUNK])
        k = np.sum(px[:n - 1] * py[:n - 1], axis=0)
        tail = py[n - 1:]
        k += px[n - 1] * (exp.a @ tail) + px[n] * (exp.b @ tail)
        out[i:i + _CHUNK] = k
    return _finish(out, shape)


# -- coefficient routes -----------------------------------------------------

def _general_expansion(spec: KernelSpec, coeffs: CoeffTable | None = None) -> Expansion:
    red = reduced_coefficients(spec.n, spec.mu, spec.sigma2, p_max=spec.resolved_p_max,
                               eps_tail=spec.eps_tail)
    if coeffs is None:
        return Expansion(spec.n, red.c1, red.c2, "propagated")
    if coeffs.mu != spec.mu or not math.isclose(coeffs.sigma ** 2, spec.sigma2, rel_tol=1e-15):
        raise InvalidParameter("coefficient table built for different (mu, sigma)")
    p_stop = min(coeffs.p_max, red.p_last)
    if p_stop < spec.n:
        raise InvalidParameter("coefficient table too short for this n")
    tab = coeffs.reduced(spec.n, p_stop)
    return Expansion(spec.n, tab.c1, tab.c2, "table")


def _series_from_logs(log_terms, signs, ratio_bound, eps, p_cap, what):
    """Accumulate terms until ``|t| * r / (1 - r)`` falls below ``eps``.

    ``log_terms(k)``/``signs(k)`` give the k-th coefficient; ``ratio_bound(k)``
    bounds ``|t_{k+j+1} / t_{k+j}|`` for all ``j >= 0``.
    """
    vals = []
    k = 0
    while True:
        lt = log_terms(k)
        t = math.exp(lt) if lt > -745.0 else 0.0
        vals.append(signs(k) * t)
        r = ratio_bound(k)
        if r < 1.0 and t * r / (1.0 - r) < eps:
            return np.array(vals)
        k += 1
        if k > p_cap:
            raise DivergenceDetected(f"{what}: series not converged within {p_cap} terms")


def _sigma1_expansion(n: int, mu: float, eps: float, p_max: int) -> Expansion:
    if mu == 0.0:
        raise InvalidParameter("mu == 0 is plain GUE; no unit-variance correction")
    l2m = math.log(2.0 * abs(mu))
    lnn = specfun.log_hermite_norm(n)
    sgn = math.copysign(1.0, mu)
    # B[p] = (2 mu)^(p-n) sqrt(N_n / N_p) for p >= n
    b = _series_from_logs(
        lambda k: k * l2m + 0.5 * (lnn - specfun.log_hermite_norm(n + k)),
        lambda k: sgn ** k,
        lambda k: 2.0 * abs(mu) / math.sqrt(2.0 * (n + k + 1)),
        eps, p_max - n, "unit-variance kernel")
    bb = np.concatenate([[0.0], b])
    aa = np.zeros_like(bb)
    aa[0] = 1.0
    return Expansion(n, aa, bb, "sigma1-tail")


def _mu0_expansion(n: int, sigma2: float, eps: float, p_max: int) -> Expansion:
    d = sigma2 - 1.0
    if d == 0.0:
        raise InvalidParameter("sigma2 == 1 at mu == 0 is plain GUE")
    ld, sd = math.log(abs(d)), math.copysign(1.0, d)
    lg, ln2 = math.lgamma, math.log(2.0)
    lnorm = specfun.log_hermite_norm
    cap = (p_max - n) // 2 + 2
    # both parity-split sums have term ratios bounded by |sigma^2 - 1|
    ratio = lambda k: abs(d)
    if n % 2 == 0:
        h = n // 2
        # H_{n-1}(x) / (2^{n-2} (h-1)! d^{h-1}) * sum_{p>=h-1} 2^{2p} p! d^p H_{2p+1}(y) / N_{2p+1}
        la = lambda k: ((2 * (h - 1 + k) - (n - 2)) * ln2 + lg(h + k) - lg(h) + k * ld
                        + 0.5 * (lnorm(n - 1) - lnorm(2 * (h - 1 + k) + 1)))
        # H_n(x) h! / (n! d^h) * sum_{p>=h} (2p)!/p! d^p H_{2p}(y) / N_{2p}
        lb = lambda k: (lg(h + 1) - lg(n + 1) + lg(2 * (h + k) + 1) - lg(h + k + 1) + k * ld
                        + 0.5 * (lnorm(n) - lnorm(2 * (h + k))))
    else:
        h = (n - 1) // 2
        # H_{n-1}(x) h! / ((n-1)! d^h) * sum_{p>=h} (2p)! d^p H_{2p}(y) / (p! N_{2p})
        la = lambda k: (lg(h + 1) - lg(n) + lg(2 * (h + k) + 1) - lg(h + k + 1) + k * ld
                        + 0.5 * (lnorm(n - 1) - lnorm(2 * (h + k))))
        # H_n(x) / (2^{n-1} h! d^h) * sum_{p>=h} 2^{2p} p! d^p H_{2p+1}(y) / N_{2p+1}
        lb = lambda k: ((2 * (h + k) - (n - 1)) * ln2 + lg(h + k + 1) - lg(h + 1) + k * ld
                        + 0.5 * (lnorm(n) - lnorm(2 * (h + k) + 1)))
    sg = lambda k: sd ** k
    ta = _series_from_logs(la, sg, ratio, eps, cap, "mu = 0 kernel")
    tb = _series_from_logs(lb, sg, ratio, eps, cap, "mu = 0 kernel")
    length = 2 * max(len(ta), len(tb)) + 1
    aa, bb = np.zeros(length), np.zeros(length)
    aa[0:2 * len(ta):2] = ta        # p = n-1, n+1, ...
    bb[1:2 * len(tb) + 1:2] = tb    # p = n, n+2, ...
    return Expansion(n, aa, bb, "mu0-parity")


@functools.lru_cache(maxsize=64)
def expansion(spec: KernelSpec) -> Expansion:
    """Resolved ``(A, B)`` for a spec (plain GUE gives the trivial expansion)."""
    if spec.path == "gue" or spec.is_plain_gue:
        aa, bb = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        return Expansion(spec.n, aa, bb, "gue")
    if spec.path == "general":
        return _general_expansion(spec)
    if spec.path == "sigma1":
        return _sigma1_expansion(spec.n, spec.mu, spec.eps_tail, spec.resolved_p_max)
    return _mu0_expansion(spec.n, spec.sigma2, spec.eps_tail, spec.resolved_p_max)


def evaluate(spec: KernelSpec, x, y):
    """``K(x, y)`` on broadcast arrays along the route named by ``spec.path``."""
    if spec.path == "gue" or spec.is_plain_gue:
        return kernel_gue(spec.n + 1, x, y)
    return _apply(expansion(spec), x, y)


# -- public per-path entry points --------------------------------------------

def kernel_bordered(spec: KernelSpec, x, y, coeffs: CoeffTable | None = None):
    """General-path kernel.

    With ``coeffs`` the coefficient ratios are formed from the seeded table
    (Gram-inverse route) instead of direct propagation; the two agree while the
    table stays well conditioned.
    Unlike :func:`evaluate` this never short-circuits the plain-GUE point, so
    ``mu = 0, sigma^2 = 1`` exercises the propagation itself.
    """
    if spec.path != "general":
        spec = KernelSpec(spec.n, spec.mu, spec.sigma2, "general", spec.eps_tail, spec.p_max)
    return _apply(_general_expansion(spec, coeffs), x, y)


def kernel_sigma1(n: int, mu: float, x, y, form: str = "tail",
                  eps_tail: float = DEFAULT_EPS_TAIL, p_max: int | None = None):
    """Unit-variance kernel.

    ``form="tail"`` sums ``(2 mu)^(p-n) H_p(y) / N_p`` over ``p >= n``;
    ``form="complement"`` uses ``e^{2 mu y - mu^2} / sqrt(pi)`` minus the
    first ``n`` terms, which cancels badly when ``|mu|`` is small.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if mu == 0.0:
        return kernel_gue(n + 1, x, y)
    if form == "tail":
        p_max = default_p_max(n) if p_max is None else p_max
        return _apply(_sigma1_expansion(n, mu, eps_tail, p_max), x, y)
    if form != "complement":
        raise InvalidParameter(f"unknown form {form!r}")
    xf, yf, shape = _flatten(x, y)
    l2m = math.log(2.0 * abs(mu))
    sgn = math.copysign(1.0, mu)
    psx = specfun.hermite_functions(n, xf)
    psy = specfun.hermite_functions(n - 1, yf) if n >= 1 else None
    # psi_N(x) sqrt(N_N) / (2 mu)^N * [e^{-y^2/2 + 2 mu y - mu^2}/sqrt(pi) - sum_p (2 mu)^p psi_p(y)/sqrt(N_p)]
    lead = np.exp(-0.5 * (yf - 2.0 * mu) ** 2 + mu * mu - 0.5 * math.log(math.pi)
                  + 0.5 * specfun.log_hermite_norm(n) - n * l2m) * sgn ** n
    part = np.zeros_like(yf)
    for p in range(n):
        part += (sgn ** (p - n) * math.exp((p - n) * l2m + 0.5 * (specfun.log_hermite_norm(n)
                 - specfun.log_hermite_norm(p)))) * psy[p]
    corr = psx[n] * (lead - part)
    out = kernel_gue(n, xf, yf) + corr
    return _finish(np.asarray(out), shape)


def kernel_sigma1_contour(n: int, mu: float, x, y, tol: float = 1e-14, max_nodes: int = 1 << 16):
    """Unit-variance kernel through the contour integral around ``{0, -2 mu}``.

    ``(1/2 pi i) oint e^{-yz - z^2/4} / (z^n (z + 2 mu)) dz`` is evaluated by the
    trapezoidal rule on a circle centred at ``-mu``; node count doubles until
    the result settles to ``tol``.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if mu == 0.0:
        return kernel_gue(n + 1, x, y)
    xf, yf, shape = _flatten(x, y)
    rad = abs(mu) + max(1.0, abs(mu))

    def gamma(m):
        th = 2.0 * np.pi * np.arange(m) / m
        e = rad * np.exp(1j * th)
        z = -mu + e
        ex = -0.5 * yf[:, None] ** 2 - yf[:, None] * z - z * z / 4.0
        f = np.exp(ex) / (z ** n * (z + 2.0 * mu)) * e
        return np.mean(f, axis=1).real

    m = 64
    g = gamma(m)
    while True:
        m *= 2
        g2 = gamma(m)
        if np.all(np.abs(g2 - g) <= tol * np.maximum(np.abs(g2), 1e-300)) or m >= max_nodes:
            g = g2
            break
        g = g2
    psx = specfun.hermite_functions(n, xf)[n]
    corr = (-1) ** n / specfun.SQRT_PI * psx * math.exp(0.5 * specfun.log_hermite_norm(n)) * g
    return _finish(kernel_gue(n, xf, yf) + corr, shape)


def kernel_mu0(n: int, sigma2: float, x, y, eps_tail: float = DEFAULT_EPS_TAIL,
               p_max: int | None = None):
    """``mu = 0`` kernel from the explicit parity-split sums."""
    spec = KernelSpec(n, 0.0, sigma2, "mu0", eps_tail, p_max)
    if spec.is_plain_gue:
        return kernel_gue(n + 1, x, y)
    return _apply(expansion(spec), x, y)


def density(spec: KernelSpec, x):
    """One-point density ``K(x, x)``."""
    return evaluate(spec, x, x)


def correlations(spec: KernelSpec, points) -> float:
    """k-point correlation ``det[K(x_j, x_l)]`` (LU with partial pivoting)."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.ndim != 1 or len(pts) == 0:
        raise InvalidParameter("points must be a non-empty 1-D sequence")
    km = evaluate(spec, pts[:, None], pts[None, :])
    return float(np.linalg.det(np.atleast_2d(km)))


# -- Gram matrix of the biorthogonal system ----------------------------------

@dataclass(frozen=True)
class GramReport:
    """Quadrature Gram matrix ``g[j, k] = int e^{-x^2} xi_j eta_k`` and checks.

    ``normalized`` divides entry ``(j, k)`` by ``sqrt(N_j N_k)`` (0-based
    indices), so its diagonal is 1 on the GUE rows.
    """

    n: int
    gram: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    block: np.ndarray
    block_expected: np.ndarray
    diag_rel_err: float
    block_rel_err: float
    off_block_max: float

    def ok(self, tol: float = 1e-8) -> bool:
        return max(self.diag_rel_err, self.block_rel_err, self.off_block_max) <= tol


def gram_check(spec: KernelSpec, coeffs: CoeffTable | None = None) -> GramReport:
    """Form the ``(n+1) x (n+1)`` Gram matrix by quadrature.

    ``xi_j = H_j`` and ``eta_k = H_k`` for ``k < n-1``; the last two ``eta`` are
    the beta- and alpha-series started at ``p = n-1``, evaluated as the closed
    generating functions minus their first ``n-1`` table terms.
    """
    n = spec.n
    if n > 12:
        raise InvalidParameter("gram_check is meant for n <= 12")
    if spec.sigma2 == 1.0:
        raise UnsupportedParameter("the alpha/beta Gram block degenerates at sigma^2 == 1")
    mu, sig = spec.mu, spec.sigma
    if coeffs is None:
        coeffs = build_coeffs(mu, sig, max(n + 1, 2))
    s = sig ** -2
    ta, tb = coeffs.tilde_alpha, coeffs.tilde_beta
    norms = np.exp(specfun.log_hermite_norm(np.arange(n + 1)))
    alpha, beta = ta / np.exp(coeffs.log_norms), tb / np.exp(coeffs.log_norms)

    def z_int(x):
        if x == 0.0:
            return 0.0
        v, _ = specfun.quad(lambda u: math.exp((s - 1.0) * u * u - 2.0 * mu * s * u), 0.0, x,
                              epsabs=0.0, epsrel=1e-13, limit=200)
        return v

    def eta(k, x):
        if k < n - 1:
            return specfun.hermite(k, x)
        c = alpha if k == n else beta
        gen = math.exp((1.0 - s) * x * x + 2.0 * mu * s * x)
        if k == n:
            gen *= z_int(x)
        low = sum(c[p] * specfun.hermite(p, x) for p in range(n - 1))
        return gen - low

    lo, hi = -abs(mu) - 12.0 * max(sig, 1.0) - 6.0, abs(mu) + 12.0 * max(sig, 1.0) + 6.0
    g = np.empty((n + 1, n + 1))
    for j in range(n + 1):
        for k in range(n + 1):
            f = lambda x: math.exp(-x * x) * specfun.hermite(j, x) * eta(k, x)
            v, _ = specfun.quad(f, lo, hi, points=[0.0, mu], epsabs=1e-13, epsrel=1e-12,
                                  limit=400)
            if not math.isfinite(v):
                raise NumericalFailure(f"Gram quadrature failed at ({j}, {k})")
            g[j, k] = v
    scale = np.sqrt(np.outer(norms, norms))
    gn = g / scale
    diag_err = float(np.max(np.abs(np.diag(g)[:n - 1] / norms[:n - 1] - 1.0))) if n > 1 else 0.0
    block = g[n - 1:, n - 1:]
    expected = np.array([[tb[n - 1], ta[n - 1]], [tb[n], ta[n]]])
    block_err = float(np.max(np.abs(block - expected)) / np.max(np.abs(expected)))
    mask = np.ones_like(gn, dtype=bool)
    mask[np.arange(n - 1), np.arange(n - 1)] = False
    mask[n - 1:, n - 1:] = False
    off = float(np.max(np.abs(gn[mask]))) if mask.any() else 0.0
    return GramReport(n, g, gn, block, expected, diag_err, block_err, off)
