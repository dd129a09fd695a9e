"""Hermite expansion coefficients of the single-bordering kernel.

For border parameters ``(mu, sigma)`` write ``tilde_beta[p] = N_p beta_p`` and
``tilde_alpha[p] = N_p alpha_p`` for the Hermite coefficients of

    exp((1 - s) x^2 + 2 mu s x)                         -> beta_p
    exp((1 - s) x^2 + 2 mu s x) int_0^x z(u) du         -> alpha_p

with ``s = sigma**-2`` and ``z(u) = exp((s - 1) u^2 - 2 mu s u)``.  Both sequences obey

    t[p] = 2 mu t[p-1] + 2 (p-1) (sigma^2 - 1) t[p-2]        (p >= 2)

and in the ``sqrt(N_p)``-normalized variables used internally,
``b_p = tilde_beta[p] / sqrt(N_p)``,

    b_p = mu sqrt(2/p) b_{p-1} + (sigma^2 - 1) sqrt((p-1)/p) b_{p-2}.

The kernel only ever needs the two solutions of that recurrence fixed by unit
initial data at ``p = N-1, N`` (:func:`reduced_coefficients`); the seeded table
is the direct route and serves as its cross-check.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import DivergenceDetected, InvalidParameter, NumericalFailure, UnsupportedParameter

_BIG = 1e100
_TINY = 1e-100


def _check_sigma(sigma: float) -> None:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidParameter("sigma must be > 0")


@dataclass(frozen=True)
class CoeffTable:
    """Seeded coefficient table, stored as mantissa times ``exp(log_scale[p])``.

    ``a_hat[p] * exp(log_scale[p])`` is ``tilde_alpha[p] / sqrt(N_p)`` and
    likewise for ``b_hat``; the scale is shared between the two sequences at
    each ``p`` so that cross ratios never see it.
    """

    mu: float
    sigma: float
    p_max: int
    a_hat: np.ndarray = field(repr=False)
    b_hat: np.ndarray = field(repr=False)
    log_scale: np.ndarray = field(repr=False)

    @property
    def log_norms(self) -> np.ndarray:
        return specfun.log_hermite_norm(np.arange(self.p_max + 1))

    @property
    def norms(self) -> np.ndarray:
        return np.exp(self.log_norms)

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """``(tilde_alpha / sqrt(N_p), tilde_beta / sqrt(N_p))`` as plain floats."""
        s = np.exp(self.log_scale)
        return self.a_hat * s, self.b_hat * s

    @property
    def tilde_alpha(self) -> np.ndarray:
        return self.a_hat * np.exp(self.log_scale + 0.5 * self.log_norms)

    @property
    def tilde_beta(self) -> np.ndarray:
        return self.b_hat * np.exp(self.log_scale + 0.5 * self.log_norms)

    def rescaled(self, alpha_factor: float, beta_factor: float) -> "CoeffTable":
        """Same table with every alpha_p and every beta_p multiplied by a constant."""
        return CoeffTable(self.mu, self.sigma, self.p_max, self.a_hat * alpha_factor,
                          self.b_hat * beta_factor, self.log_scale)

    def reduced(self, n: int, p_stop: int | None = None) -> "ReducedCoefficients":
        """Kernel coefficients for core size ``n`` from the table (Gram-inverse route).

        ``c1[k] = (a_N b_p - b_N a_p) / D`` and ``c2[k] = (b_{N-1} a_p - a_{N-1} b_p) / D``
        at ``p = n - 1 + k`` with ``D = a_N b_{N-1} - a_{N-1} b_N``.  Loses accuracy
        when both sequences are dominated by one solution (large ``mu``).
        """
        p_stop = self.p_max if p_stop is None else p_stop
        if n < 1 or p_stop > self.p_max or p_stop < n:
            raise InvalidParameter("need 1 <= n <= p_stop <= p_max")
        a, b, ls = self.a_hat, self.b_hat, self.log_scale
        m, k = n - 1, n
        det = a[k] * b[m] - a[m] * b[k]
        if det == 0.0:
            raise NumericalFailure("degenerate 2x2 Gram block")
        p = np.arange(m, p_stop + 1)
        c1 = (a[k] * b[p] - b[k] * a[p]) / det * np.exp(ls[p] - ls[m])
        c2 = (b[m] * a[p] - a[m] * b[p]) / det * np.exp(ls[p] - ls[k])
        return ReducedCoefficients(n, self.mu, self.sigma ** 2, c1, c2)


def _seed_integrals(mu: float, sigma: float) -> tuple[float, float, float, float, float]:
    """Quadrature seeds ``(a0, a1, b0, b1)`` (normalized, times exp(-log_scale)) and log_scale."""
    s = sigma ** -2
    log_scale = mu * mu * s
    lo, hi = mu - 14.0 * sigma - 8.0, mu + 14.0 * sigma + 8.0
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)

    def outer_exp(x):
        return -s * (x - mu) ** 2

    def b_int(p):
        val, _ = specfun.quad(lambda x: math.exp(outer_exp(x)) * (1.0 if p == 0 else 2.0 * x),
                                lo, hi, points=[mu], **opts)
        return val

    def inner(x):
        # outer weight folded in so nothing overflows for sigma < 1
        ox = outer_exp(x)
        f = lambda u: math.exp(ox + (s - 1.0) * u * u - 2.0 * mu * s * u)
        if x == 0.0:
            return 0.0
        val, _ = specfun.quad(f, 0.0, x, epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    def a_int(p):
        val, _ = specfun.quad(lambda x: inner(x) * (1.0 if p == 0 else 2.0 * x),
                                lo, hi, points=[0.0, mu], **opts)
        return val

    sqrt_n0 = math.exp(0.5 * specfun.log_hermite_norm(0))
    sqrt_n1 = math.exp(0.5 * specfun.log_hermite_norm(1))
    b0, b1 = b_int(0) / sqrt_n0, b_int(1) / sqrt_n1
    a0, a1 = a_int(0) / sqrt_n0, a_int(1) / sqrt_n1
    if not all(map(math.isfinite, (a0, a1, b0, b1))):
        raise NumericalFailure("seed quadrature did not produce finite values")
    return a0, a1, b0, b1, log_scale


def build_coeffs(mu: float, sigma: float, p_max: int) -> CoeffTable:
    """Seeds ``p = 0, 1`` by quadrature, everything above by the recurrence.

    ``sigma == 1`` is rejected: the alpha-beta Gram block degenerates there and the
    dedicated unit-variance kernel must be used instead.
    """
    _check_sigma(sigma)
    if p_max < 2:
        raise InvalidParameter("p_max must be >= 2")
    if sigma == 1.0:
        raise UnsupportedParameter("sigma == 1: use the sigma1 kernel path")
    a0, a1, b0, b1, s0 = _seed_integrals(mu, sigma)
    if mu == 0.0:
        a0, b1 = 0.0, 0.0
    a = np.empty(p_max + 1)
    b = np.empty(p_max + 1)
    ls = np.empty(p_max + 1)
    a[:2], b[:2], ls[:2] = (a0, a1), (b0, b1), s0
    scale = s0
    pa2, pa1, pb2, pb1 = a0, a1, b0, b1
    d = sigma * sigma - 1.0
    for p in range(2, p_max + 1):
        k1, k2 = mu * math.sqrt(2.0 / p), d * math.sqrt((p - 1) / p)
        na, nb = k1 * pa1 + k2 * pa2, k1 * pb1 + k2 * pb2
        m = max(abs(na), abs(nb))
        if m > _BIG or 0.0 < m < _TINY:
            na, nb, pa1, pb1 = na / m, nb / m, pa1 / m, pb1 / m
            scale += math.log(m)
        a[p], b[p], ls[p] = na, nb, scale
        pa2, pa1, pb2, pb1 = pa1, na, pb1, nb
    return CoeffTable(float(mu), float(sigma), int(p_max), a, b, ls)


@dataclass(frozen=True)
class ReducedCoefficients:
    """Kernel coefficients ``c1[k], c2[k]`` at ``p = n - 1 + k``.

    ``c1`` starts ``(1, 0, ...)`` and ``c2`` starts ``(0, 1, ...)``; these are the
    finite-``N`` scaled ratios whose large-``N`` limits :func:`gamma_p` gives.
    """

    n: int
    mu: float
    sigma2: float
    c1: np.ndarray = field(repr=False)
    c2: np.ndarray = field(repr=False)

    @property
    def p_last(self) -> int:
        return self.n - 1 + len(self.c1) - 1


_WINDOW = 8


def reduced_coefficients(n: int, mu: float, sigma2: float, *, p_max: int | None = None,
                         eps_tail: float | None = None) -> ReducedCoefficients:
    """Propagate the normalized recurrence from unit data at ``p = n-1, n``.

    With ``eps_tail`` set, stops once a geometric bound on the remaining
    coefficient envelope drops below ``eps_tail`` (absolute: the kernel is O(1)
    while the coefficients may peak far above it and cancel); raises
    :class:`DivergenceDetected` if that never happens by ``p_max``.
    Without it, runs to ``p_max`` exactly.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if not sigma2 > 0:
        raise InvalidParameter("sigma2 must be > 0")
    if p_max is None:
        p_max = 20 * n + 20000
    if p_max < n:
        raise InvalidParameter("p_max must be >= n")
    d = sigma2 - 1.0
    c1 = [1.0, 0.0]
    c2 = [0.0, 1.0]
    env = [1.0, 1.0]
    for p in range(n + 1, p_max + 1):
        k1, k2 = mu * math.sqrt(2.0 / p), d * math.sqrt((p - 1) / p)
        c1.append(k1 * c1[-1] + k2 * c1[-2])
        c2.append(k1 * c2[-1] + k2 * c2[-2])
        e = max(abs(c1[-1]), abs(c2[-1]), abs(c1[-2]), abs(c2[-2]))
        if not math.isfinite(e):
            raise DivergenceDetected(f"coefficients overflowed at p={p}")
        env.append(e)
        if eps_tail is not None and len(env) > _WINDOW + 2:
            if e == 0.0:
                break
            past = env[-1 - _WINDOW]
            rho = (e / past) ** (1.0 / _WINDOW) if past > 0 else 1.0
            if rho < 1.0 and e / (1.0 - rho) < eps_tail:
                break
    else:
        if eps_tail is not None:
            raise DivergenceDetected(
                f"kernel series not converged by p={p_max} (sigma^2={sigma2:g}); "
                "the correction sums converge only for 0 < sigma^2 < 2")
    return ReducedCoefficients(n, float(mu), float(sigma2), np.array(c1), np.array(c2))


# Closed forms and direct quadrature, used only as cross-checks.

def direct_quadrature(mu: float, sigma: float, p: int) -> tuple[float, float]:
    """``(tilde_alpha[p], tilde_beta[p])`` straight from their defining integrals.

    The outer weight ``exp(-s x^2 + 2 mu s x)`` is folded into the inner
    integrand; the common factor ``exp(mu^2 s)`` is applied at the end.
    """
    _check_sigma(sigma)
    if p < 0:
        raise InvalidParameter("p must be >= 0")
    s = sigma ** -2
    lo, hi = mu - 14.0 * sigma - 8.0, mu + 14.0 * sigma + 8.0
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    hp = lambda x: specfun.hermite(p, x)
    outer = lambda x: -s * (x - mu) ** 2

    def inner(x):
        ox = outer(x)
        if x == 0.0:
            return 0.0
        v, _ = specfun.quad(lambda u: math.exp(ox + (s - 1.0) * u * u - 2.0 * mu * s * u),
                              0.0, x, epsabs=0.0, epsrel=1e-13, limit=200)
        return v

    b, _ = specfun.quad(lambda x: math.exp(outer(x)) * hp(x), lo, hi, points=[mu], **opts)
    a, _ = specfun.quad(lambda x: inner(x) * hp(x), lo, hi, points=[0.0, mu], **opts)
    f = math.exp(mu * mu * s)
    return a * f, b * f


def closed_form_beta(mu: float, sigma: float, p: int) -> float:
    """``exp((mu/sigma)^2) (1-sigma^2)^(p/2) H_p(mu / sqrt(1-sigma^2))`` as printed.

    Differs from ``tilde_beta[p]`` by the p-independent factor ``sigma sqrt(pi)``.
    """
    _check_sigma(sigma)
    if sigma >= 1.0:
        raise UnsupportedParameter("closed forms need sigma^2 < 1 (real Hermite argument)")
    w = 1.0 - sigma * sigma
    return math.exp((mu / sigma) ** 2) * w ** (p / 2) * specfun.hermite(p, mu / math.sqrt(w))


def closed_form_alpha(mu: float, sigma: float, p: int, tilde_alpha0: float) -> float:
    """Two-solution representation ``(1-sigma^2)^(p/2) (k1 H_p(x0) + k2 h_p(x0))``.

    ``k1, k2`` are fixed by ``tilde_alpha0`` and the ``p = 1`` inhomogeneous step
    ``tilde_alpha1 = 2 mu tilde_alpha0 + sigma^2 sqrt(pi)``.
    """
    _check_sigma(sigma)
    if sigma >= 1.0:
        raise UnsupportedParameter("closed forms need sigma^2 < 1 (real Hermite argument)")
    w = 1.0 - sigma * sigma
    x0 = mu / math.sqrt(w)
    h0, h1 = specfun.hilbert_hermite_seeds(x0)
    k2 = sigma * sigma * specfun.SQRT_PI / (math.sqrt(w) * h1 - 2.0 * mu * h0)
    k1 = tilde_alpha0 - h0 * k2
    return w ** (p / 2) * (k1 * specfun.hermite(p, x0) + k2 * specfun.hilbert_hermite(p, x0))


def mu0_tilde_alpha(p: int, sigma: float) -> float:
    if p % 2 == 0:
        return 0.0
    q = (p - 1) // 2
    return specfun.SQRT_PI * 4.0 ** q * math.factorial(q) * sigma ** 2 * (sigma ** 2 - 1.0) ** q


def mu0_tilde_beta(p: int, sigma: float) -> float:
    if p % 2 == 1:
        return 0.0
    q = p // 2
    return (specfun.SQRT_PI * math.factorial(2 * q) / math.factorial(q) * sigma
            * (sigma ** 2 - 1.0) ** q)


@dataclass(frozen=True)
class GammaLimits:
    """Large-``N`` limit data at scaled mean ``c`` (``mu = c sqrt(N/2)``) and ``sigma2``."""

    c: float
    sigma2: float
    x_plus: complex = field(init=False)
    x_minus: complex = field(init=False)

    def __post_init__(self):
        disc = cmath.sqrt(self.c * self.c - 4.0 * (1.0 - self.sigma2))
        xp, xm = (self.c + disc) / 2.0, (self.c - disc) / 2.0
        if disc.imag == 0.0:
            xp, xm = xp.real, xm.real
        object.__setattr__(self, "x_plus", xp)
        object.__setattr__(self, "x_minus", xm)

    @property
    def degenerate(self) -> bool:
        return self.c * self.c == 4.0 * (1.0 - self.sigma2)


def gamma_p(limits: GammaLimits, p: int, which: int) -> float:
    """Closed-form solution of ``g[q+1] = c g[q] + (sigma^2 - 1) g[q-1]``.

    ``which=1`` starts from ``(1, 0)``, ``which=2`` from ``(0, 1)``.
    """
    if p < 0 or which not in (1, 2):
        raise InvalidParameter("need p >= 0 and which in {1, 2}")
    if limits.degenerate:
        raise UnsupportedParameter("confluent roots c^2 = 4 (1 - sigma^2) are not treated")
    xp, xm = limits.x_plus, limits.x_minus
    if which == 1:
        val = (xp ** p * xm - xp * xm ** p) / (xm - xp)
    else:
        val = (xp ** p - xm ** p) / (xp - xm)
    return float(val.real) if isinstance(val, complex) else float(val)


def gamma_finite(c: float, sigma2: float, n: int, p: int, which: int,
                 route: str = "recurrence") -> float:
    """Finite-``n`` scaled ratio whose ``n -> inf`` limit is :func:`gamma_p`.

    ``route="recurrence"`` propagates the reduced coefficients directly;
    ``route="table"`` forms the ratio from a seeded :class:`CoeffTable` and is
    only trustworthy for moderate ``mu``.
    """
    if which not in (1, 2) or p < 0:
        raise InvalidParameter("need p >= 0 and which in {1, 2}")
    mu = c * math.sqrt(n / 2.0)
    if route == "recurrence":
        red = reduced_coefficients(n, mu, sigma2, p_max=max(n, n - 1 + p))
    elif route == "table":
        red = build_coeffs(mu, math.sqrt(sigma2), max(n, n - 1 + p, 2)).reduced(n, max(n, n - 1 + p))
    else:
        raise InvalidParameter(f"unknown route {route!r}")
    arr = red.c1 if which == 1 else red.c2
    return float(arr[p])
