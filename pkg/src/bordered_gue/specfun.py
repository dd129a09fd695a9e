"""Hermite polynomials, Hermite functions, their Hilbert transforms, Airy functions.

Conventions
-----------
``H_n`` are the physicists' Hermite polynomials, orthogonal against ``exp(-x**2)``
with norms ``N_n = 2**n n! sqrt(pi)``.  The weighted orthonormal functions are
``psi_n(x) = exp(-x**2/2) H_n(x) / sqrt(N_n)``; everything kernel-facing uses
``psi_n`` because the raw products overflow around ``n ~ 300``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameter

SQRT_PI = math.sqrt(math.pi)
PI_M14 = math.pi ** -0.25
AIRY_MAX_ARG = 200.0

_RESCALE_UP = 1e100


def quad(f, a, b, **kw):
    """:func:`scipy.integrate.quad` with roundoff warnings silenced.

    The tolerances used across the package sit near machine precision, where
    QUADPACK routinely reports roundoff; accuracy is checked by oracles instead.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, **kw)


def hermite(n: int, x):
    """Raw Hermite polynomial ``H_n(x)`` by upward recurrence.

    Overflows for large ``n`` and ``|x|``; use :func:`hermite_weighted` there.
    """
    if n < 0:
        raise InvalidParameter("hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for p in range(n):
        h_prev, h = h, 2.0 * x * h - 2.0 * p * h_prev
    return h if h.ndim else float(h)


def log_hermite_norm(n):
    """``log(N_n)`` with ``N_n = 2**n n! sqrt(pi)``."""
    n = np.asarray(n, dtype=float)
    out = n * math.log(2.0) + special.gammaln(n + 1.0) + 0.5 * math.log(math.pi)
    return out if out.ndim else float(out)


def hermite_norm(n: int) -> float:
    return math.exp(log_hermite_norm(n))


def hermite_functions(nmax: int, x) -> np.ndarray:
    """All of ``psi_0(x) .. psi_nmax(x)`` stacked along a new leading axis.

    The normalized recurrence ``psi_{n+1} = x sqrt(2/(n+1)) psi_n - sqrt(n/(n+1)) psi_{n-1}``
    is run on mantissas with a per-point log scale, so neither the Gaussian factor
    nor the polynomial growth can overflow or prematurely underflow.
    """
    if nmax < 0:
        raise InvalidParameter("nmax must be >= 0")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.reshape(-1)
    out = np.empty((nmax + 1,) + x.shape)
    prev = np.zeros_like(x)
    cur = np.full_like(x, PI_M14)
    logscale = -0.5 * x * x
    out[0] = cur * np.exp(logscale)
    for n in range(nmax):
        prev, cur = cur, x * math.sqrt(2.0 / (n + 1)) * cur - math.sqrt(n / (n + 1)) * prev
        big = np.abs(cur) > _RESCALE_UP
        if big.any():
            f = np.abs(cur[big])
            cur[big] /= f
            prev[big] /= f
            logscale[big] += np.log(f)
        out[n + 1] = cur * np.exp(logscale)
    return out.reshape((nmax + 1,) + shape)


def hermite_weighted(n: int, x):
    """``psi_n(x)`` without storing lower orders (fine for ``n`` up to ~1e6)."""
    if n < 0:
        raise InvalidParameter("hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.reshape(-1)
    prev = np.zeros_like(x)
    cur = np.full_like(x, PI_M14)
    logscale = -0.5 * x * x
    for k in range(n):
        prev, cur = cur, x * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        if k % 16 == 0 or k == n - 1:
            big = np.abs(cur) > _RESCALE_UP
            if big.any():
                f = np.abs(cur[big])
                cur[big] /= f
                prev[big] /= f
                logscale[big] += np.log(f)
    out = (cur * np.exp(logscale)).reshape(shape)
    return out if out.ndim else float(out)


def _pv_gauss(x: float, moment: int) -> float:
    # PV of  int exp(-u^2) u^moment / (x - u) du; quad's cauchy weight is 1/(u - x).
    lo, hi = min(x, 0.0) - 14.0, max(x, 0.0) + 14.0
    val, _ = quad(lambda u: math.exp(-u * u) * u ** moment, lo, hi,
                            weight="cauchy", wvar=x, epsabs=1e-14, epsrel=1e-13, limit=200)
    return -val


def hilbert_hermite_seeds(x: float) -> tuple[float, float]:
    """``(h_0(x), h_1(x))`` by principal-value quadrature."""
    return _pv_gauss(x, 0), 2.0 * _pv_gauss(x, 1)


def hilbert_hermite(p: int, x: float) -> float:
    """``h_p(x) = PV int exp(-u^2) H_p(u) / (x - u) du`` for real ``x``.

    Seeds come from quadrature; higher orders follow the Hermite recurrence,
    which ``h_p`` obeys for ``p >= 1`` (at ``p = 0`` an extra ``-2 sqrt(pi)``
    appears because ``int exp(-u^2) du`` does not vanish).
    """
    if p < 0:
        raise InvalidParameter("order must be >= 0")
    h0, h1 = hilbert_hermite_seeds(float(x))
    if p == 0:
        return h0
    for k in range(1, p):
        h0, h1 = h1, 2.0 * x * h1 - 2.0 * k * h0
    return h1


def hilbert_hermite0_dawson(x):
    """Closed form ``h_0(x) = 2 sqrt(pi) F(x)`` with Dawson's integral ``F``."""
    return 2.0 * SQRT_PI * special.dawsn(x)


@dataclass(frozen=True)
class AiryValue:
    x: float
    ai: float
    ai_prime: float


def _check_airy_range(x: np.ndarray) -> None:
    if np.any(~np.isfinite(x)) or np.any(np.abs(x) > AIRY_MAX_ARG):
        raise InvalidParameter(f"Airy argument outside supported range |x| <= {AIRY_MAX_ARG:g}")


def airy_ai(x):
    """Vectorized ``(Ai(x), Ai'(x))``."""
    x = np.asarray(x, dtype=float)
    _check_airy_range(x)
    ai, aip, _, _ = special.airy(x)
    return ai, aip


def airy(x: float) -> AiryValue:
    ai, aip = airy_ai(x)
    return AiryValue(float(x), float(ai), float(aip))


# Independent evaluations used to validate the production Airy route.

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)


def airy_series(x: float, tol: float = 1e-17, max_terms: int = 400) -> tuple[float, float]:
    """Maclaurin series for ``(Ai, Ai')``; accurate for moderate ``|x|``."""
    x3 = x ** 3
    f, g, fp, gp = 1.0, x, 0.0, 1.0
    tf, tg, tfp, tgp = 1.0, x, x * x / 2.0, 1.0
    fp = tfp
    for k in range(1, max_terms):
        tf *= x3 / ((3 * k) * (3 * k - 1))
        tg *= x3 / ((3 * k + 1) * (3 * k))
        tgp *= x3 / ((3 * k) * (3 * k - 2))
        if k >= 2:
            tfp *= x3 / ((3 * k - 1) * (3 * k - 3))
            fp += tfp
        f += tf
        g += tg
        gp += tgp
        if k > 3 and max(abs(tf), abs(tg), abs(tfp), abs(tgp)) < tol * max(1.0, abs(f), abs(g)):
            break
    c1, c2 = AI0, -AIP0
    return c1 * f - c2 * g, c1 * fp - c2 * gp


def _airy_u(kmax: int) -> list[float]:
    return [math.exp(math.lgamma(3 * k + 0.5) - k * math.log(54.0) - math.lgamma(k + 1)
                     - math.lgamma(k + 0.5)) for k in range(kmax)]


def airy_asymptotic(x: float, kmax: int = 30) -> tuple[float, float]:
    """Large-``|x|`` asymptotic expansions for ``(Ai, Ai')`` (optimally truncated)."""
    ax = abs(x)
    zeta = 2.0 / 3.0 * ax ** 1.5
    u = _airy_u(kmax)
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, kmax)]

    def series(coef, start, step, sign_alt):
        total, last = 0.0, math.inf
        for j, k in enumerate(range(start, kmax, step)):
            term = coef[k] / zeta ** k * ((-1) ** j if sign_alt else (-1) ** k)
            if abs(term) > last:
                break
            total += term
            last = abs(term)
        return total

    if x > 0:
        pref = math.exp(-zeta) / (2.0 * SQRT_PI)
        return (pref * ax ** -0.25 * series(u, 0, 1, False),
                -pref * ax ** 0.25 * series(v, 0, 1, False))
    ph = zeta - math.pi / 4.0
    ue, uo = series(u, 0, 2, True), series(u, 1, 2, True)
    ve, vo = series(v, 0, 2, True), series(v, 1, 2, True)
    ai = (math.cos(ph) * ue + math.sin(ph) * uo) / (SQRT_PI * ax ** 0.25)
    aip = ax ** 0.25 / SQRT_PI * (math.sin(ph) * ve - math.cos(ph) * vo)
    return ai, aip


def plancherel_rotach(n: int, u):
    """``psi_n`` at the soft-edge point ``x = sqrt(2n) - u / (sqrt(2) n**(1/6))``."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    u = np.asarray(u, dtype=float)
    x = math.sqrt(2.0 * n) - u / (math.sqrt(2.0) * n ** (1.0 / 6.0))
    return hermite_weighted(n, x)


def plancherel_rotach_limit(n: int, u):
    """The Airy approximation ``2**(1/4) n**(-1/12) Ai(-u)`` to :func:`plancherel_rotach`."""
    ai, _ = airy_ai(-np.asarray(u, dtype=float))
    out = 2.0 ** 0.25 * n ** (-1.0 / 12.0) * ai
    return out if np.ndim(out) else float(out)
