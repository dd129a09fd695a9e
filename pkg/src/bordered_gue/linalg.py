"""Hermitian eigenvalues: Householder tridiagonalization plus implicit QL.

Used for single matrices and as the reference solver in tests; the Monte Carlo
harness calls LAPACK through :func:`numpy.linalg.eigvalsh` for throughput.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameter, NumericalFailure

MAX_QL_ITER = 30


def tridiagonalize(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Returns ``(d, e)``: the diagonal and the (non-negative) off-diagonal.  The
    complex sub-diagonal left by the reflections is made real by a diagonal
    unitary similarity, which only changes its phases.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameter("expected a square matrix")
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        alpha = -phase * norm_x
        v = x
        v[0] -= alpha
        v /= np.linalg.norm(v)
        # A <- H A H with H = I - 2 v v^*, restricted to the trailing block
        blk = a[k + 1:, k:]
        blk -= 2.0 * np.outer(v, v.conj() @ blk)
        blk = a[k:, k + 1:]
        blk -= 2.0 * np.outer(blk @ v, v.conj())
    d = a.diagonal().real.copy()
    e = np.abs(a.diagonal(-1)).copy()
    return d, e


def tql_eigenvalues(d, e) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix (implicit QL, shifted)."""
    d = [float(v) for v in d]
    n = len(d)
    e = [float(v) for v in e] + [0.0]
    if len(e) != n:
        raise InvalidParameter("off-diagonal must have length len(d) - 1")
    eps = np.finfo(float).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_QL_ITER:
                raise NumericalFailure(f"QL iteration did not converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f, b = s * e[i], c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s, c = f / r, g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d)


def eigvalsh_householder(m) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, descending."""
    d, e = tridiagonalize(m)
    return np.sort(tql_eigenvalues(d, e))[::-1]
