"""Monte Carlo harness: sampled spectra against the analytic predictions.

Sampling is split into fixed-size chunks, chunk ``k`` drawing from the
``k``-th child of ``SeedSequence(seed)``.  Results therefore depend only on
``(seed, parameters)``, never on how many worker threads ran the chunks.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from . import edge
from .ensemble import (EnsembleParams, border_once, eigenvalues, joint_pdf_r1_batch,
                       sample_bordered, sample_diag_replaced)
from .errors import InvalidParameter
from .kernel import KernelSpec, evaluate

CHUNK = 1000
CHUNK_ENTRIES = 4_000_000   # matrix entries per chunk (64 MB of complex128)
THREADS_ENV = "BORDERED_GUE_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if np.any(np.diff(self.edges) <= 0):
            raise InvalidParameter("histogram edges must be strictly ascending")
        if len(self.counts) != len(self.edges) - 1:
            raise InvalidParameter("need len(counts) == len(edges) - 1")
        if int(np.sum(self.counts)) != self.total:
            raise InvalidParameter("counts must sum to the total")

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        """Bins samples; values outside ``[edges[0], edges[-1])`` must not occur."""
        counts, _ = np.histogram(samples, bins=edges)
        return cls(np.asarray(edges, float), counts, int(np.sum(counts)))


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    stats: dict
    tolerance: dict
    passed: bool
    seed: int
    extra: dict = field(default_factory=dict)

    def to_json(self, **kw) -> str:
        return json.dumps(_jsonable(asdict(self)), **kw)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls(**json.loads(text))


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- chunked deterministic sampling ---------------------------------------------

def chunk_size(dim: int) -> int:
    """Draws per RNG stream for ``dim x dim`` matrices; depends on ``dim`` only."""
    return int(min(CHUNK, max(1, CHUNK_ENTRIES // (dim * dim))))


def _chunked(draws: int, seed: int, fn, threads: int | None = None,
             chunk: int = CHUNK) -> np.ndarray:
    """Run ``fn(rng, size)`` over fixed chunks and stack the results in chunk order.

    Each chunk owns a child of ``SeedSequence(seed)``, so the output depends on
    ``(seed, draws, chunk)`` only, never on the thread count.
    """
    if draws < 1:
        raise InvalidParameter("draws must be >= 1")
    sizes = [chunk] * (draws // chunk) + ([draws % chunk] if draws % chunk else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(c), k) for c, k in zip(children, sizes)]
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(jobs) == 1:
        parts = [fn(r, k) for r, k in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)


def sample_spectra(params: EnsembleParams, draws: int, seed: int | None = None,
                   form: str = "bordered", threads: int | None = None) -> np.ndarray:
    """``(draws, n + r)`` array of descending spectra.

    ``form="diag"`` borders the diagonalized core instead (single bordering).
    """
    seed = params.seed if seed is None else seed
    if form == "bordered":
        fn = lambda rng, k: eigenvalues(sample_bordered(params, rng, k))
    elif form == "diag":
        fn = lambda rng, k: eigenvalues(sample_diag_replaced(params, rng, k))
    else:
        raise InvalidParameter(f"unknown form {form!r}")
    return _chunked(draws, seed, fn, threads, chunk_size(params.dim))


def sample_conditional(a, mu: float, sigma: float, draws: int, seed: int,
                       threads: int | None = None) -> np.ndarray:
    """Spectra of ``diag(a)`` bordered once; the core spectrum is held fixed."""
    a = np.sort(np.asarray(a, float))[::-1]
    core = np.diag(a).astype(complex)

    def fn(rng, k):
        return eigenvalues(border_once(np.broadcast_to(core, (k,) + core.shape), mu, sigma, rng))

    return _chunked(draws, seed, fn, threads, chunk_size(len(a) + 1))


# -- chi-square machinery ---------------------------------------------------------

def merge_small(observed, expected, min_expected: float = 5.0):
    """Merge adjacent bins (in order) until every expected count is at least ``min_expected``."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp:
            obs[-1] += o_acc
            exp[-1] += e_acc
        else:
            obs.append(o_acc)
            exp.append(e_acc)
    return np.array(obs), np.array(exp)


def chi_square(observed, expected, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Pearson statistic, degrees of freedom and p-value after merging small bins."""
    obs, exp = merge_small(observed, expected, min_expected)
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    dof = max(len(obs) - 1, 1)
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


def _gl(lo: float, hi: float, k: int):
    t, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _gl_composite(lo: float, hi: float, k: int, width: float):
    panels = max(1, int(math.ceil((hi - lo) / width)))
    cuts = np.linspace(lo, hi, panels + 1)
    xs, ws = zip(*(_gl(a, b, k) for a, b in zip(cuts[:-1], cuts[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def kernel_bin_masses(spec: KernelSpec, edges, tail: float = 12.0, nodes: int = 12) -> np.ndarray:
    """``int K(x, x) dx`` over each bin, plus the two tails as first and last entries."""
    edges = np.asarray(edges, float)
    bounds = np.concatenate([[edges[0] - tail], edges, [edges[-1] + tail]])
    xs, ws = zip(*(_gl(a, b, nodes) for a, b in zip(bounds[:-1], bounds[1:])))
    xs, ws = np.concatenate(xs), np.concatenate(ws)
    dens = np.asarray(evaluate(spec, xs, xs))
    return (dens * ws).reshape(len(bounds) - 1, nodes).sum(axis=1)


def _matching_spec(params: EnsembleParams) -> KernelSpec:
    if params.r != 1:
        raise InvalidParameter("kernels exist for single bordering only")
    s2 = params.sigma ** 2
    if s2 == 1.0 and params.mu != 0.0:
        return KernelSpec(params.n, params.mu, 1.0, "sigma1")
    return KernelSpec(params.n, params.mu, s2, "general")


def density_experiment(params: EnsembleParams, draws: int, bins: int = 40,
                       kernel_spec: KernelSpec | None = None, alpha: float = 0.01,
                       threads: int | None = None) -> ExperimentReport:
    """Pooled eigenvalue histogram against the kernel density ``K(x, x)``.

    ``kernel_spec`` overrides the kernel matched to ``params`` (negative controls).
    Bins span the 0.1%..99.9% pooled quantiles; two tail bins catch the rest.
    """
    spec = _matching_spec(params) if kernel_spec is None else kernel_spec
    spectra = sample_spectra(params, draws, threads=threads)
    pooled = spectra.ravel()
    lo, hi = np.quantile(pooled, [0.001, 0.999])
    edges = np.linspace(lo, hi, bins + 1)
    inner, _ = np.histogram(pooled, bins=edges)
    # np.histogram closes the last bin on the right
    observed = np.concatenate([[np.sum(pooled < lo)], inner, [np.sum(pooled > hi)]])
    expected = draws * kernel_bin_masses(spec, edges)
    chi2, dof, p = chi_square(observed, expected)
    return ExperimentReport(
        "density", {**asdict(params), "draws": draws, "bins": bins, "kernel": asdict(spec)},
        {"chi2": chi2, "dof": dof, "p_value": p, "expected_total": float(expected.sum()),
         "observed_total": int(observed.sum())},
        {"p_min": alpha}, bool(p > alpha), params.seed,
        {"edges": edges, "observed": observed, "expected": expected})


def conditional_pdf_experiment(a, mu: float, sigma: float, draws: int, seed: int,
                               bins_per_axis: int = 6, nodes: int = 6, alpha: float = 0.01,
                               threads: int | None = None) -> ExperimentReport:
    """Spectra of a fixed core bordered once against the exact conditional density.

    The interlacing region is a product of intervals, so cells are products of
    per-coordinate quantile bins and cell probabilities come from tensor
    Gauss-Legendre quadrature of the exact density.
    """
    a = np.sort(np.asarray(a, float))[::-1]
    n = len(a)
    lam = sample_conditional(a, mu, sigma, draws, seed, threads)
    reach = max(np.max(np.abs(a)), abs(mu)) + 9.0 * sigma + 3.0
    ends = np.concatenate([[reach], a, [-reach]])
    axis_edges = []
    for j in range(n + 1):
        q = np.quantile(lam[:, j], np.linspace(0.0, 1.0, bins_per_axis + 1)[1:-1])
        axis_edges.append(np.concatenate([[ends[j + 1]], np.sort(q), [ends[j]]]))
    idx = [np.clip(np.searchsorted(e, lam[:, j], side="right") - 1, 0, bins_per_axis - 1)
           for j, e in enumerate(axis_edges)]
    flat = np.ravel_multi_index(idx, (bins_per_axis,) * (n + 1))
    observed = np.bincount(flat, minlength=bins_per_axis ** (n + 1)).astype(float)
    expected = np.empty_like(observed)
    for cell in itertools.product(range(bins_per_axis), repeat=n + 1):
        pts, wts = zip(*(_gl_composite(axis_edges[j][c], axis_edges[j][c + 1], nodes, 0.75 * sigma)
                         for j, c in enumerate(cell)))
        grid = np.stack(np.meshgrid(*pts, indexing="ij"), axis=-1).reshape(-1, n + 1)
        w = np.prod(np.stack(np.meshgrid(*wts, indexing="ij"), axis=-1).reshape(-1, n + 1), axis=1)
        expected[np.ravel_multi_index(cell, (bins_per_axis,) * (n + 1))] = \
            draws * float(np.sum(joint_pdf_r1_batch(grid, a, mu, sigma) * w))
    chi2, dof, p = chi_square(observed, expected)
    return ExperimentReport(
        "conditional_pdf", {"a": a, "mu": mu, "sigma": sigma, "draws": draws,
                            "bins_per_axis": bins_per_axis},
        {"chi2": chi2, "dof": dof, "p_value": p, "expected_mass": float(expected.sum() / draws)},
        {"p_min": alpha}, bool(p > alpha), seed)


def lemma_equivalence_experiment(params: EnsembleParams, draws: int, alpha: float = 0.01,
                                 threads: int | None = None) -> ExperimentReport:
    """Two-sample KS per ordered eigenvalue: bordered GUE against bordered diagonal core."""
    x = sample_spectra(params, draws, params.seed, "bordered", threads)
    y = sample_spectra(params, draws, params.seed + 1, "diag", threads)
    res = [stats.ks_2samp(x[:, j], y[:, j]) for j in range(x.shape[1])]
    pv = [float(r.pvalue) for r in res]
    return ExperimentReport(
        "lemma_equivalence", {**asdict(params), "draws": draws},
        {"ks": [float(r.statistic) for r in res], "p_values": pv, "p_min_observed": min(pv)},
        {"p_min": alpha}, bool(min(pv) > alpha), params.seed)


# -- phase scan ---------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseRow:
    c: float
    sigma2: float
    phase: str
    mean_max: float
    std_max: float
    se_max: float
    mean_min: float
    std_min: float
    se_min: float
    predicted_max: float
    predicted_min: float
    gap: float


def phase_point(c: float, sigma2: float, n: int, draws: int, seed: int,
                threads: int | None = None) -> PhaseRow:
    """Extreme-eigenvalue statistics of the ``n``-core bordered matrix at ``(c, sigma2)``.

    ``gap`` is the mean largest eigenvalue in edge units,
    ``sqrt(2) n^(1/6) (mean_max - sqrt(2n))``.
    """
    mu = c * math.sqrt(n / 2.0)
    params = EnsembleParams(n, 1, mu, math.sqrt(sigma2), seed)
    spectra = sample_spectra(params, draws, threads=threads)
    hi, lo = spectra[:, 0], spectra[:, -1]
    pt = edge.PhasePoint(c, sigma2)
    phase = edge.classify(pt)
    edge_x = math.sqrt(2.0 * n)
    pmax = edge.outlier_location(pt, n, "largest") if pt.largest_separated else edge_x
    pmin = edge.outlier_location(pt, n, "smallest") if pt.smallest_separated else -edge_x
    sd_hi, sd_lo = float(np.std(hi, ddof=1)), float(np.std(lo, ddof=1))
    return PhaseRow(c, sigma2, phase, float(hi.mean()), sd_hi, sd_hi / math.sqrt(draws),
                    float(lo.mean()), sd_lo, sd_lo / math.sqrt(draws), pmax, pmin,
                    float(edge.edge_scale(n, hi.mean())))


def phase_boundary(rows, level: float = 0.0) -> list[tuple[float, float]]:
    """Per ``sigma2``, the ``c`` where ``gap`` first crosses ``level`` (linear interpolation)."""
    out = []
    for s2 in sorted({r.sigma2 for r in rows}):
        line = sorted((r for r in rows if r.sigma2 == s2), key=lambda r: r.c)
        for r0, r1 in zip(line, line[1:]):
            g0, g1 = r0.gap - level, r1.gap - level
            if g0 == 0.0:
                out.append((s2, r0.c))
                break
            if g0 < 0.0 < g1 or g1 < 0.0 < g0:
                out.append((s2, r0.c + (r1.c - r0.c) * g0 / (g0 - g1)))
                break
    return out


def phase_scan(points, n: int, draws: int, seed: int = 0,
               threads: int | None = None) -> list[PhaseRow]:
    """:func:`phase_point` over ``(c, sigma2)`` pairs, each with its own seed offset."""
    return [phase_point(c, s2, n, draws, seed + i, threads) for i, (c, s2) in enumerate(points)]


# -- soft-edge fluctuations ----------------------------------------------------------

def ks_against_cdf(samples, grid, cdf) -> float:
    """Kolmogorov distance between samples and a CDF tabulated on ``grid`` (linear interpolation)."""
    x = np.sort(np.asarray(samples, float))
    f = np.interp(x, grid, cdf, left=0.0, right=1.0)
    k = np.arange(1, len(x) + 1) / len(x)
    return float(max(np.max(k - f), np.max(f - (k - 1.0 / len(x)))))


def edge_fluctuation_experiment(path: str, n: int, s: float, draws: int, seed: int = 0,
                                grid=None, reference: str = "deformed", tol: float = 0.05,
                                threads: int | None = None, **tuning) -> ExperimentReport:
    """Scaled largest eigenvalue against the Fredholm CDF of the edge kernel.

    ``reference="airy"`` compares against the undeformed Airy law instead.
    """
    spec = edge.edge_spec(path, n, s, **tuning)
    params = EnsembleParams(n, 1, spec.mu, spec.sigma, seed)
    lam = sample_spectra(params, draws, threads=threads)[:, 0]
    n_ref = tuning.get("n_ref") or n
    xs = edge.edge_scale(n_ref, lam)
    grid = np.arange(-7.0, 5.0001, 0.1) if grid is None else np.asarray(grid, float)
    if reference == "deformed":
        cdf = edge.edge_cdf(s, grid)
    elif reference == "airy":
        cdf = edge.edge_cdf(None, grid)
    else:
        raise InvalidParameter("reference must be 'deformed' or 'airy'")
    ks = ks_against_cdf(xs, grid, cdf)
    return ExperimentReport(
        "edge_fluctuation", {"path": path, "n": n, "s": s, "draws": draws, "mu": spec.mu,
                             "sigma2": spec.sigma2, "reference": reference, **tuning},
        {"ks": ks, "mean_scaled_max": float(xs.mean()),
         "empirical_below_grid": float(np.mean(xs < grid[0])),
         "empirical_above_grid": float(np.mean(xs > grid[-1]))},
        {"ks_max": tol}, bool(ks <= tol), seed,
        {"grid": grid, "cdf": cdf, "empirical_cdf": np.searchsorted(np.sort(xs), grid, "right") / draws})
