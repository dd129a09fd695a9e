"""Macroscopic edge picture and soft-edge scaling.

Covers the semicircle and its resolvent, the separation phase diagram and
outlier locations, the soft-edge scaling maps and their tunings, the
deformed Airy kernel, and Nystrom evaluation of Fredholm determinants.

Throughout, ``n`` in a scaling map is the *reference size*, by default the
core size ``N`` of the bordered ``(N+1) x (N+1)`` matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import specfun
from .errors import InvalidParameter, NumericalFailure
from .kernel import KernelSpec, evaluate


# -- semicircle ---------------------------------------------------------------

def semicircle(n: float, lam):
    """``sqrt(2n - lam^2) / pi`` on ``|lam| <= sqrt(2n)``, zero outside."""
    lam = np.asarray(lam, dtype=float)
    out = np.sqrt(np.clip(2.0 * n - lam * lam, 0.0, None)) / math.pi
    return out if out.ndim else float(out)


def stieltjes_semicircle(n: float, lam):
    """``int rho_W(y) / (lam - y) dy = lam (1 - sqrt(1 - 2n / lam^2))`` for ``|lam| > sqrt(2n)``.

    Branch chosen so that the value decays like ``n / lam``.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam) <= math.sqrt(2.0 * n)):
        raise InvalidParameter("the resolvent formula needs |lambda| > sqrt(2n)")
    # written as 2n / (lam (1 + sqrt(...))) to avoid cancellation for large |lam|
    out = 2.0 * n / (lam * (1.0 + np.sqrt(1.0 - 2.0 * n / (lam * lam))))
    return out if out.ndim else float(out)


# -- phase diagram ------------------------------------------------------------

@dataclass(frozen=True)
class PhasePoint:
    """Scaled mean ``c`` (``mu = c sqrt(N/2)``) and border variance ``sigma2``."""

    c: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidParameter("sigma2 must be > 0")

    @property
    def largest_separated(self) -> bool:
        return self.sigma2 + self.c > 2.0

    @property
    def smallest_separated(self) -> bool:
        return self.sigma2 - self.c > 2.0


def classify(point: PhasePoint) -> str:
    """One of ``none``, ``largest``, ``smallest``, ``both`` (strict inequalities)."""
    hi, lo = point.largest_separated, point.smallest_separated
    return {(False, False): "none", (True, False): "largest",
            (False, True): "smallest", (True, True): "both"}[(hi, lo)]


def _check_side(point: PhasePoint, side: str) -> None:
    if side not in ("largest", "smallest"):
        raise InvalidParameter("side must be 'largest' or 'smallest'")
    ok = point.largest_separated if side == "largest" else point.smallest_separated
    if not ok:
        raise InvalidParameter(f"the {side} eigenvalue is not separated at {point}")


def outlier_location(point: PhasePoint, n: float, side: str = "largest") -> float:
    """Leading-order position of a separated eigenvalue, closed form.

    ``sqrt(n/2) (sigma^4 + c^2) / ((1 - sigma^2/2) c +- sigma^2 sqrt(c^2/4 - 1 + sigma^2))``
    with ``+`` for the largest and ``-`` for the smallest eigenvalue.
    """
    _check_side(point, side)
    c, s2 = point.c, point.sigma2
    root = math.sqrt(c * c / 4.0 - (1.0 - s2))
    sign = 1.0 if side == "largest" else -1.0
    return math.sqrt(n / 2.0) * (s2 * s2 + c * c) / ((1.0 - s2 / 2.0) * c + sign * s2 * root)


def outlier_location_joukowski(point: PhasePoint, n: float, side: str = "largest") -> float:
    """Same position from the averaged secular equation in Joukowski variables.

    With ``lam = +-sqrt(n/2) (w + 1/w)``, the equation becomes
    ``w^2 -+ c w + (1 - sigma^2) = 0``; the relevant root is the larger one.
    """
    _check_side(point, side)
    c = point.c if side == "largest" else -point.c
    w = (c + math.sqrt(c * c - 4.0 * (1.0 - point.sigma2))) / 2.0
    lam = math.sqrt(n / 2.0) * (w + 1.0 / w)
    return lam if side == "largest" else -lam


# -- soft-edge scaling --------------------------------------------------------

def edge_scale(n: float, x):
    """``X = sqrt(2) n^(1/6) (x - sqrt(2n))``."""
    return math.sqrt(2.0) * n ** (1.0 / 6.0) * (np.asarray(x, dtype=float) - math.sqrt(2.0 * n))


def edge_unscale(n: float, X):
    """``x = sqrt(2n) + X / (sqrt(2) n^(1/6))``."""
    return math.sqrt(2.0 * n) + np.asarray(X, dtype=float) / (math.sqrt(2.0) * n ** (1.0 / 6.0))


@dataclass(frozen=True)
class EdgePoint:
    X: float
    Y: float
    s: float
    n: float

    @classmethod
    def from_raw(cls, n: float, x: float, y: float, s: float) -> "EdgePoint":
        return cls(float(edge_scale(n, x)), float(edge_scale(n, y)), s, n)

    def raw(self) -> tuple[float, float]:
        return float(edge_unscale(self.n, self.X)), float(edge_unscale(self.n, self.Y))


def tuning_sigma1(n: float, s: float) -> float:
    """Border mean at ``sigma = 1`` realizing deformation ``s``: ``sqrt(n/2) (1 - s / n^(1/3))``.

    Positive ``s`` is subcritical (no outlier), matching the sign of ``s`` in
    :func:`deformed_airy_kernel`.
    """
    return math.sqrt(n / 2.0) * (1.0 - s / n ** (1.0 / 3.0))


def tuning_sigma1_printed(n: float, s: float) -> float:
    """The opposite-sign map ``sqrt(n/2) (1 + s / n^(1/3))``; realizes deformation ``-s``."""
    return math.sqrt(n / 2.0) * (1.0 + s / n ** (1.0 / 3.0))


def tuning_mu0(n: float, s: float) -> float:
    """Border variance at ``mu = 0`` realizing ``s``: ``2 - 2 s / n^(1/3)``."""
    return 2.0 - 2.0 * s / n ** (1.0 / 3.0)


def deformation_general(c_hat: float, s1: float, s2: float) -> float:
    """Effective ``s`` for ``c = c_hat + s1 n^(-1/3)``, ``sigma^2 = 2 - c_hat - s2 n^(-1/3)``.

    The recurrence root near 1 is ``1 + (s1 - s2) / ((2 - c_hat) n^(1/3))``, so
    ``s = (s2 - s1) / (2 - c_hat)``.
    """
    if not 0.0 <= c_hat < 2.0:
        raise InvalidParameter("need 0 <= c_hat < 2")
    return (s2 - s1) / (2.0 - c_hat)


def deformation_general_printed(c_hat: float, s1: float, s2: float) -> float:
    """``((c_hat - 3) s1 + 2 s2) / (2 (2 - c_hat))``; equals :func:`deformation_general` at ``c_hat = 1`` or ``s1 = 0``."""
    if not 0.0 <= c_hat < 2.0:
        raise InvalidParameter("need 0 <= c_hat < 2")
    return ((c_hat - 3.0) * s1 + 2.0 * s2) / (2.0 * (2.0 - c_hat))


def tuning_general(n: float, c_hat: float, s1: float, s2: float,
                   sigma_hat2: float | None = None) -> tuple[float, float, float]:
    """``(mu, sigma2, s)`` for the general critical tuning.

    ``sigma_hat2`` defaults to ``2 - c_hat``; an explicit value may miss that
    constraint by at most ``n^(-1/3)``.
    """
    if sigma_hat2 is None:
        sigma_hat2 = 2.0 - c_hat
    elif abs(sigma_hat2 + c_hat - 2.0) > n ** (-1.0 / 3.0):
        raise InvalidParameter("sigma_hat^2 + c_hat must equal 2 within n^(-1/3)")
    eps = n ** (-1.0 / 3.0)
    c = c_hat + s1 * eps
    sigma2 = sigma_hat2 - s2 * eps
    if not sigma2 > 0:
        raise InvalidParameter("tuning produced sigma^2 <= 0")
    return c * math.sqrt(n / 2.0), sigma2, deformation_general(c_hat, s1, s2)


def s_from_tuning(n: float, *, mu: float | None = None, sigma2: float | None = None) -> float:
    """Invert :func:`tuning_sigma1` (give ``mu``) or :func:`tuning_mu0` (give ``sigma2``)."""
    if (mu is None) == (sigma2 is None):
        raise InvalidParameter("give exactly one of mu, sigma2")
    if mu is not None:
        return (1.0 - mu / math.sqrt(n / 2.0)) * n ** (1.0 / 3.0)
    return (2.0 - sigma2) * n ** (1.0 / 3.0) / 2.0


# -- Airy kernels ---------------------------------------------------------------

def airy_kernel(X, Y, diag_tol: float = 1e-9):
    """``(Ai(X) Ai'(Y) - Ai(Y) Ai'(X)) / (X - Y)``; diagonal ``Ai'(X)^2 - X Ai(X)^2``."""
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    ax, apx = specfun.airy_ai(X)
    ay, apy = specfun.airy_ai(Y)
    d = X - Y
    near = np.abs(d) < diag_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (ax * apy - ay * apx) / d
    on = apx * apx - X * ax * ax
    out = np.where(near, on, off)
    return out if out.ndim else float(out)


_DIRECT_S = 1.0


def _airy_tail_exp(Y: float, s: float) -> float:
    # int_Y^inf e^{s (t - Y)} Ai(t) dt; Ai decays like exp(-2/3 t^1.5) so the cut is safe
    hi = max(Y, 0.0) + 30.0 + max(s, 0.0) ** 2
    lo = Y
    pts = [p for p in (0.0,) if lo < p < hi]
    v, _ = specfun.quad(lambda t: math.exp(s * (t - Y)) * special.airy(t)[0], lo, hi,
                          points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=400)
    return v


def airy_exp_integral(Y: float, s: float) -> float:
    """``I(Y, s) = int_{-inf}^Y e^{-s (Y - t)} Ai(t) dt``, continued to all real ``s``.

    For ``s > 1`` the damped integral is summed directly.  Otherwise
    ``I = e^{-s Y + s^3/3} - int_Y^inf e^{s (t - Y)} Ai(t) dt`` from the Laplace
    transform ``int e^{s t} Ai(t) dt = e^{s^3 / 3}``.
    """
    Y, s = float(Y), float(s)
    if not (math.isfinite(Y) and math.isfinite(s)):
        raise InvalidParameter("Y and s must be finite")
    if s > _DIRECT_S:
        span = 40.0 / s
        v, _ = specfun.quad(lambda tau: math.exp(-s * tau) * special.airy(Y - tau)[0], 0.0, span,
                              epsabs=1e-14, epsrel=1e-12, limit=400)
        return v
    return math.exp(-s * Y + s ** 3 / 3.0) - _airy_tail_exp(Y, s)


def airy_exp_integral_vec(Y, s: float) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    return np.vectorize(lambda y: airy_exp_integral(y, s), otypes=[float])(Y)


def laplace_airy(s: float) -> float:
    """``int_R e^{s t} Ai(t) dt`` by quadrature (oracle for ``e^{s^3/3}``).

    The negative half-line is cut where ``e^{s t}`` has killed the integrand;
    at ``s = 0`` the conditionally convergent tail is handled by stopping at a
    point where the leading oscillatory remainder vanishes.
    """
    pos, _ = specfun.quad(lambda t: math.exp(s * t) * special.airy(t)[0], 0.0, 40.0,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    if s > 0:
        cut = min(40.0 / s, 400.0)
        edges = np.concatenate([[0.0], -special.ai_zeros(int(2 + (2 / 3) * cut ** 1.5 / math.pi))[0]])
        edges = edges[edges <= cut]
        neg = sum(specfun.quad(lambda t: math.exp(-s * t) * special.airy(-t)[0], a, b,
                                 epsabs=1e-16, epsrel=1e-13)[0] for a, b in zip(edges[:-1], edges[1:]))
        return pos + neg
    if s < 0:
        raise InvalidParameter("the two-sided transform diverges for s < 0")
    # F(x) = int_0^x Ai(-t) dt ~ 2/3 - pi^{-1/2} x^{-3/4} cos(zeta + pi/4) + O(x^{-9/4}).
    # Stop where the cosine vanishes (even k keeps the sign of the next term fixed),
    # then remove the x^{-9/4} remainder by Richardson extrapolation over two stops.
    ks = (1000, 2000)
    stops = [(1.5 * (math.pi / 4.0 + k * math.pi)) ** (2.0 / 3.0) for k in ks]
    zeros = -special.ai_zeros(ks[-1] + 5)[0]
    edges = np.concatenate([[0.0], zeros[zeros < stops[-1]]])
    pieces = [specfun.quad(lambda t: special.airy(-t)[0], a, b, epsabs=1e-16, epsrel=1e-13)[0]
              for a, b in zip(edges[:-1], edges[1:])]
    vals = []
    for x_stop in stops:
        inner = edges[edges < x_stop]
        body = math.fsum(pieces[:len(inner) - 1])
        last, _ = specfun.quad(lambda t: special.airy(-t)[0], inner[-1], x_stop,
                                 epsabs=1e-16, epsrel=1e-13)
        vals.append(body + last)
    w1, w2 = (x ** 2.25 for x in stops)
    return pos + (w2 * vals[1] - w1 * vals[0]) / (w2 - w1)


def deformed_airy_kernel(X, Y, s: float):
    """``K_soft(X, Y) + Ai(X) I(Y, s)``."""
    X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
    ax, _ = specfun.airy_ai(X)
    out = airy_kernel(X, Y) + ax * airy_exp_integral_vec(Y, s)
    return out if np.ndim(out) else float(out)


# -- Fredholm determinants ------------------------------------------------------

@dataclass(frozen=True)
class FredholmConfig:
    """Gauss-Legendre order ``m`` (doubled until ``tol``), truncation length ``L``.

    With ``split`` set, the interval is cut at ``split * L`` and a fraction
    ``left_share`` of the nodes goes to the left panel, where edge kernels
    carry almost all of their mass.  ``split=None`` is a single panel.
    """

    m: int = 16
    L: float | None = None
    tol: float = 1e-8
    m_max: int = 256
    split: float | None = 0.5
    left_share: float = 0.7

    def __post_init__(self):
        if self.m < 8:
            raise InvalidParameter("m must be >= 8")
        if self.L is not None and not self.L > 0:
            raise InvalidParameter("L must be > 0")
        if self.m_max < self.m:
            raise InvalidParameter("m_max must be >= m")
        if self.split is not None and not (0.0 < self.split < 1.0 and 0.0 < self.left_share < 1.0):
            raise InvalidParameter("split and left_share must lie in (0, 1)")

    def length(self, s_lower: float) -> float:
        return 12.0 + abs(s_lower) if self.L is None else self.L


@dataclass(frozen=True)
class FredholmResult:
    value: float
    error: float
    m: int


def _gauss_panel(lo: float, hi: float, k: int):
    t, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def nodes(a: float, b: float, m: int, cfg: FredholmConfig | None = None):
    """Quadrature nodes and weights on ``[a, b]`` following ``cfg``'s panel layout."""
    if cfg is None or cfg.split is None:
        return _gauss_panel(a, b, m)
    cut = a + cfg.split * (b - a)
    m1 = min(m - 1, max(1, int(round(cfg.left_share * m))))
    x1, w1 = _gauss_panel(a, cut, m1)
    x2, w2 = _gauss_panel(cut, b, m - m1)
    return np.concatenate([x1, x2]), np.concatenate([w1, w2])


def _nystrom(kernel, a: float, b: float, m: int, cfg: FredholmConfig | None = None) -> float:
    x, w = nodes(a, b, m, cfg)
    sw = np.sqrt(w)
    km = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    return float(np.linalg.det(np.eye(m) - sw[:, None] * km * sw[None, :]))


def fredholm_det(kernel, s_lower: float, cfg: FredholmConfig = FredholmConfig()) -> FredholmResult:
    """``det(I - K)`` on ``[s_lower, s_lower + L]`` by Nystrom discretization.

    ``kernel(X, Y)`` must broadcast.  The node count doubles until two successive
    values agree to ``cfg.tol``; the last difference is reported as ``error``.
    """
    a = float(s_lower)
    b = a + cfg.length(a)
    m = cfg.m
    prev = _nystrom(kernel, a, b, m, cfg)
    while m < cfg.m_max:
        m *= 2
        cur = _nystrom(kernel, a, b, m, cfg)
        if abs(cur - prev) <= cfg.tol:
            return FredholmResult(cur, abs(cur - prev), m)
        prev = cur
    raise NumericalFailure(f"Fredholm determinant not converged by m={cfg.m_max} at s={s_lower}")


class DeformedAiryOperator:
    """Vectorized deformed Airy kernel with ``I(., s)`` memoized per node set."""

    def __init__(self, s: float):
        self.s = float(s)
        self._cache: dict[bytes, np.ndarray] = {}

    def __call__(self, X, Y):
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        ycol = Y[0] if Y.ndim == 2 else Y
        key = ycol.tobytes()
        iy = self._cache.get(key)
        if iy is None:
            iy = airy_exp_integral_vec(ycol, self.s)
            self._cache[key] = iy
        ax, _ = specfun.airy_ai(X)
        return airy_kernel(X, Y) + ax * (iy[None, :] if Y.ndim == 2 else iy)


def edge_cdf(s: float | None, grid, cfg: FredholmConfig = FredholmConfig()) -> np.ndarray:
    """Largest-eigenvalue law ``P(X_max <= t)`` on ``grid``.

    ``s=None`` uses the plain Airy kernel; otherwise the deformed kernel.
    """
    op = airy_kernel if s is None else DeformedAiryOperator(s)
    return np.array([fredholm_det(op, float(t), cfg).value for t in np.asarray(grid, dtype=float)])


# -- finite-N to edge -------------------------------------------------------------

def scaled_finite_kernel(spec: KernelSpec, X, Y, n_ref: float | None = None):
    """``K_{N+1}(x, y) / (sqrt(2) n^(1/6))`` at the unscaled points of ``(X, Y)``."""
    n_ref = spec.n if n_ref is None else n_ref
    x, y = edge_unscale(n_ref, X), edge_unscale(n_ref, Y)
    return evaluate(spec, x, y) / (math.sqrt(2.0) * n_ref ** (1.0 / 6.0))


def edge_spec(path: str, n: int, s: float, *, c_hat: float = 1.0, s1: float = 0.0,
              n_ref: float | None = None) -> KernelSpec:
    """Kernel spec of core size ``n`` tuned to deformation ``s`` near the critical point.

    ``path`` is ``sigma1``, ``mu0`` or ``general``; the general tuning keeps
    ``s1`` and solves for ``s2``.
    """
    nr = n if n_ref is None else n_ref
    if path == "sigma1":
        return KernelSpec(n, tuning_sigma1(nr, s), 1.0, "sigma1")
    if path == "mu0":
        return KernelSpec(n, 0.0, tuning_mu0(nr, s), "mu0")
    if path == "general":
        s2 = s * (2.0 - c_hat) + s1
        mu, sigma2, _ = tuning_general(nr, c_hat, s1, s2)
        return KernelSpec(n, mu, sigma2, "general")
    raise InvalidParameter(f"unknown path {path!r}")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    finite: float
    limit: float
    deviation: float


@dataclass(frozen=True)
class ConvergenceTable:
    path: str
    X: float
    Y: float
    s: float
    rows: tuple = field(default_factory=tuple)

    @property
    def deviations(self) -> list[float]:
        return [r.deviation for r in self.rows]

    @property
    def decreasing(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))


def finite_to_edge_convergence(path: str, X: float, Y: float, s: float,
                               ns=(50, 100, 200), **tuning) -> ConvergenceTable:
    """Deviation of the scaled finite-N kernel from the deformed Airy kernel over ``ns``."""
    limit = float(deformed_airy_kernel(X, Y, s))
    rows = []
    for n in ns:
        spec = edge_spec(path, int(n), s, **tuning)
        val = float(scaled_finite_kernel(spec, X, Y, tuning.get("n_ref")))
        rows.append(ConvergenceRow(int(n), val, limit, abs(val - limit)))
    return ConvergenceTable(path, float(X), float(Y), float(s), tuple(rows))
