"""Sampling of GUE and bordered GUE matrices, and exact eigenvalue densities.

Gaussian convention: ``N[m, s]`` has mean ``m`` and standard deviation ``s``.
The GUE has weight ``exp(-Tr X^2)``: diagonal entries ``N[0, 1/sqrt(2)]``,
off-diagonal real and imaginary parts ``N[0, 1/2]``.  A border row has corner
``N[mu, sigma/sqrt(2)]`` and off-diagonal parts ``N[0, sigma/2]``, so
``sigma = 1, mu = 0`` is just a bigger GUE matrix.

All samplers take a :class:`numpy.random.Generator` and an optional batch
``size``; batched matrices have shape ``(size, dim, dim)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import InvalidParameter, NumericalFailure
from .linalg import eigvalsh_householder

LOG_SQRT_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class EnsembleParams:
    """A rank-``r`` bordering of an ``n x n`` GUE core."""

    n: int
    r: int = 1
    mu: float = 0.0
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameter("n must be an integer >= 1")
        if int(self.r) != self.r or self.r < 0:
            raise InvalidParameter("r must be an integer >= 0")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise InvalidParameter("sigma must be > 0")
        if not math.isfinite(self.mu):
            raise InvalidParameter("mu must be finite")

    @property
    def dim(self) -> int:
        return self.n + self.r


def _shape(size):
    if size is None:
        return ()
    return (size,) if np.isscalar(size) else tuple(size)


def sample_gue(n: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """GUE matrices with density proportional to ``exp(-Tr X^2)``."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    shp = _shape(size) + (n, n)
    g = rng.normal(scale=0.5, size=shp) + 1j * rng.normal(scale=0.5, size=shp)
    h = np.triu(g, 1)
    h = h + np.conj(np.swapaxes(h, -1, -2))
    diag = rng.normal(scale=math.sqrt(0.5), size=_shape(size) + (n,))
    idx = np.arange(n)
    h[..., idx, idx] = diag
    return h


def border_once(core: np.ndarray, mu: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Prepend one border row/column to ``core`` (batched over leading axes)."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidParameter("sigma must be > 0")
    core = np.asarray(core)
    batch, n = core.shape[:-2], core.shape[-1]
    v = (rng.normal(scale=sigma / 2.0, size=batch + (n,))
         + 1j * rng.normal(scale=sigma / 2.0, size=batch + (n,)))
    c = rng.normal(loc=mu, scale=sigma / math.sqrt(2.0), size=batch)
    out = np.empty(batch + (n + 1, n + 1), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1:, 0] = v
    out[..., 0, 1:] = np.conj(v)
    out[..., 1:, 1:] = core
    return out


def sample_bordered(params: EnsembleParams, rng: np.random.Generator, size=None) -> np.ndarray:
    m = sample_gue(params.n, rng, size)
    for _ in range(params.r):
        m = border_once(m, params.mu, params.sigma, rng)
    return m


def sample_diag_replaced(params: EnsembleParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Single bordering around the diagonalized core ``diag(eig(G))``."""
    if params.r != 1:
        raise InvalidParameter("the diagonal-core form is defined for r = 1")
    core = sample_gue(params.n, rng, size)
    a = np.linalg.eigvalsh(core)
    d = np.zeros_like(core)
    idx = np.arange(params.n)
    d[..., idx, idx] = a
    return border_once(d, params.mu, params.sigma, rng)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of one Hermitian matrix, descending."""

    values: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)

    @property
    def largest(self) -> float:
        return float(self.values[0])

    @property
    def smallest(self) -> float:
        return float(self.values[-1])


def spectrum(m: np.ndarray, method: str = "householder") -> Spectrum:
    m = np.asarray(m)
    if m.ndim != 2:
        raise InvalidParameter("spectrum() takes a single matrix; use eigenvalues() for batches")
    return Spectrum(eigenvalues(m, method))


def eigenvalues(m: np.ndarray, method: str = "lapack") -> np.ndarray:
    """Eigenvalues sorted descending along the last axis.

    ``method="householder"`` uses the in-package solver (single matrices or
    small batches); ``"lapack"`` is the batched production route.
    """
    m = np.asarray(m)
    if method == "lapack":
        return np.linalg.eigvalsh(m)[..., ::-1]
    if method == "householder":
        if m.ndim == 2:
            return eigvalsh_householder(m)
        flat = m.reshape((-1,) + m.shape[-2:])
        return np.stack([eigvalsh_householder(x) for x in flat]).reshape(m.shape[:-1])
    raise InvalidParameter(f"unknown eigensolver {method!r}")


def _log_vandermonde(x: np.ndarray) -> float:
    """``log prod_{j<k} (x_j - x_k)`` for strictly descending ``x``."""
    diffs = x[:, None] - x[None, :]
    iu = np.triu_indices(len(x), 1)
    return float(np.sum(np.log(diffs[iu])))


def interlaced(lam, a) -> bool:
    """``lam_1 > a_1 > lam_2 > ... > a_N > lam_{N+1}``."""
    lam, a = np.asarray(lam, float), np.asarray(a, float)
    if len(lam) != len(a) + 1:
        return False
    return bool(np.all(lam[:-1] > a) and np.all(a > lam[1:]))


def log_gue_norm(n: int) -> float:
    """Log normalization of the ordered GUE density ``exp(-sum x^2) prod (x_j - x_k)^2``."""
    return (0.5 * n * math.log(math.pi) - 0.5 * n * (n - 1) * math.log(2.0)
            + sum(math.lgamma(j + 1) for j in range(1, n)))


def gue_ordered_pdf(x) -> float:
    """Density of the descending GUE spectrum."""
    x = np.asarray(x, float)
    if np.any(np.diff(x) >= 0):
        return 0.0
    n = len(x)
    return math.exp(-np.sum(x * x) + 2.0 * _log_vandermonde(x) - log_gue_norm(n))


def joint_pdf_r1(lam, a, mu: float, sigma: float) -> float:
    """Density of the bordered spectrum ``lam`` (length N+1) given core eigenvalues ``a``.

    Both arguments are descending.  Zero off the interlacing region.
    """
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    lam, a = np.asarray(lam, float), np.asarray(a, float)
    n = len(a)
    if len(lam) != n + 1:
        raise InvalidParameter("lam must have exactly one more entry than a")
    if not interlaced(lam, a):
        return 0.0
    s = sigma ** -2
    log_c = n * math.log(2.0 * s) - math.log(sigma) - LOG_SQRT_PI
    expo = (-s * np.sum(lam ** 2) + s * np.sum(a ** 2) - mu * mu * s
            + 2.0 * mu * s * (np.sum(lam) - np.sum(a)))
    log_v = _log_vandermonde(lam) - (_log_vandermonde(a) if n > 1 else 0.0)
    return math.exp(log_c + expo + log_v)


def joint_pdf_r1_batch(lam: np.ndarray, a, mu: float, sigma: float) -> np.ndarray:
    """Vectorized :func:`joint_pdf_r1` over rows of ``lam`` (shape ``(k, N+1)``)."""
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    lam = np.atleast_2d(np.asarray(lam, float))
    a = np.asarray(a, float)
    n = len(a)
    if lam.shape[1] != n + 1:
        raise InvalidParameter("lam must have exactly one more column than len(a)")
    s = sigma ** -2
    inside = np.all(lam[:, :-1] > a, axis=1) & np.all(lam[:, 1:] < a, axis=1)
    log_c = n * math.log(2.0 * s) - math.log(sigma) - LOG_SQRT_PI
    expo = (-s * np.sum(lam ** 2, axis=1) + s * np.sum(a ** 2) - mu * mu * s
            + 2.0 * mu * s * (np.sum(lam, axis=1) - np.sum(a)))
    iu = np.triu_indices(n + 1, 1)
    diffs = (lam[:, :, None] - lam[:, None, :])[:, iu[0], iu[1]]
    with np.errstate(invalid="ignore", divide="ignore"):
        log_v = np.sum(np.log(np.abs(diffs)), axis=1)
    log_va = _log_vandermonde(a) if n > 1 else 0.0
    out = np.exp(log_c + expo + log_v - log_va)
    return np.where(inside, out, 0.0)


def _poly_family(kind: str, k: int, u):
    if kind == "monomial":
        return u ** k
    if kind == "hermite":
        return specfun.hermite(k, u) / 2.0 ** k
    raise InvalidParameter(f"unknown polynomial family {kind!r}")


def h_integral(k: int, r: int, x: float, mu: float, sigma: float, family: str = "monomial") -> float:
    """``(1/r!) int_0^x (x-u)^r exp((s-1)u^2 - 2 mu s u) p_k(u) du`` with ``s = sigma^-2``.

    The lower terminal 0 (rather than -inf) changes the integral by a polynomial
    of degree ``r`` in ``x``, which the determinant it enters discards; it also
    keeps the integral finite when ``sigma < 1``.
    """
    s = sigma ** -2
    f = lambda u: (x - u) ** r * math.exp((s - 1.0) * u * u - 2.0 * mu * s * u) * _poly_family(family, k, u)
    if x == 0.0:
        return 0.0
    val, err = specfun.quad(f, 0.0, x, epsabs=0.0, epsrel=1e-12, limit=200)
    if not math.isfinite(val):
        raise NumericalFailure(f"h-integral quadrature failed at x={x}, k={k}")
    return val / math.factorial(r)


def joint_pdf_rborder(lam, n: int, r: int, mu: float, sigma: float,
                      family: str = "monomial") -> float:
    """Density of the descending spectrum of the ``r``-times bordered ``n x n`` GUE.

    Product of a Vandermonde-type determinant in ``q_j = 2^-j H_j`` and a mixed
    determinant of ``h_{k,r-1}`` columns and monomials; ``family`` selects the
    polynomials inside the h-integrals (the value does not depend on it).
    """
    if r < 1:
        raise InvalidParameter("r must be >= 1")
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    lam = np.asarray(lam, float)
    dim = n + r
    if lam.shape != (dim,):
        raise InvalidParameter(f"expected {dim} eigenvalues")
    if np.any(np.diff(lam) >= 0):
        return 0.0
    s = sigma ** -2
    q = np.array([[specfun.hermite(j, x) / 2.0 ** j for j in range(dim)] for x in lam])
    m = np.empty((dim, dim))
    for j, x in enumerate(lam):
        for k in range(n):
            m[j, k] = h_integral(k, r - 1, float(x), mu, sigma, family)
        for t in range(1, r + 1):
            m[j, n + t - 1] = x ** (r - t)
    sign_q, logdet_q = np.linalg.slogdet(q)
    sign_m, logdet_m = np.linalg.slogdet(m)
    if sign_q == 0 or sign_m == 0:
        return 0.0
    log_c = -log_gue_norm(n) if n > 0 else 0.0
    for t in range(1, r + 1):
        log_c += (n + t - 1) * math.log(2.0 * s) - mu * mu * s - math.log(sigma) - LOG_SQRT_PI
    log_c -= sum(math.lgamma(t + 1) for t in range(1, r))
    expo = -s * np.sum(lam ** 2) + 2.0 * mu * s * np.sum(lam)
    return math.exp(log_c + expo + logdet_q + logdet_m)


def unit_variance_form(lam, n: int, r: int, mu: float) -> float:
    """Unnormalized ``sigma = 1`` density ``e^{-sum lam^2} |Delta| |det[lam^{k-1} | e^{2 mu lam} lam^{r-s}]|``."""
    lam = np.asarray(lam, float)
    dim = n + r
    m = np.empty((dim, dim))
    for j, x in enumerate(lam):
        m[j, :n] = [x ** k for k in range(n)]
        m[j, n:] = [math.exp(2.0 * mu * x) * x ** (r - t) for t in range(1, r + 1)]
    _, logdet = np.linalg.slogdet(m)
    return math.exp(-np.sum(lam ** 2) + _log_vandermonde(lam) + logdet)


def rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators derived from ``(seed, index)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
