"""Command-line front end: ``bordered-gue {sample,kernel,phase,edge,verify}``.

Every command writes plain CSV (RFC 4180, 17 significant digits) plus a JSON
sidecar holding the version, seed, fully resolved parameters and wall time.
``--format json`` folds the data into the JSON file instead.  A ``--config``
JSON file supplies defaults; explicit flags win.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import __version__, acceptance, edge, experiments, kernel
from .ensemble import EnsembleParams
from .errors import BorderedGUEError, InvalidParameter

COMMANDS = ("sample", "kernel", "phase", "edge", "verify")


# -- parsing helpers ------------------------------------------------------------

def parse_grid(text) -> np.ndarray:
    """``a:b:k`` (k points from a to b), a comma list, or a single number."""
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    if isinstance(text, (list, tuple)):
        return np.array([float(v) for v in text])
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
            if k < 1 or (k == 1 and a != b):
                raise ValueError
            return np.linspace(a, b, k)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise InvalidParameter(f"bad grid {text!r}: expected a:b:k, a comma list or a number") from None


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, rows, header=None):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\r\n")
        if header is not None:
            w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of defaults; flags win")
    common.add_argument("--out", help="output path (CSV, or JSON with --format json)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker cap (default ${experiments.THREADS_ENV} or 1)")

    p = argparse.ArgumentParser(prog="bordered-gue", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="eigenvalue samples, one draw per row")
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--draws", type=int, default=1000)
    s.add_argument("--form", choices=("bordered", "diag"), default="bordered")

    k = sub.add_parser("kernel", parents=[common], help="kernel matrix and density on a grid")
    k.add_argument("--path", choices=kernel.PATHS, default="general")
    k.add_argument("--n", type=int, default=6)
    k.add_argument("--mu", type=float, default=0.0)
    k.add_argument("--sigma2", type=float, default=1.5)
    k.add_argument("--grid", default="-4:4:81")
    k.add_argument("--ygrid", default=None, help="y grid (defaults to --grid)")
    k.add_argument("--eps-tail", type=float, default=kernel.DEFAULT_EPS_TAIL)

    ph = sub.add_parser("phase", parents=[common], help="extreme-eigenvalue phase scan")
    ph.add_argument("--c", default="0:3:7")
    ph.add_argument("--sigma2", default="0.5:4:8")
    ph.add_argument("--n", type=int, default=200)
    ph.add_argument("--draws", type=int, default=200)

    e = sub.add_parser("edge", parents=[common], help="soft-edge fluctuations and kernel convergence")
    e.add_argument("--path", choices=("sigma1", "mu0", "general"), default="sigma1")
    e.add_argument("--s", type=float, default=0.0)
    e.add_argument("--n", type=int, default=200)
    e.add_argument("--draws", type=int, default=5000)
    e.add_argument("--c-hat", type=float, default=1.0)
    e.add_argument("--s1", type=float, default=0.0)
    e.add_argument("--reference", choices=("deformed", "airy"), default="deformed")
    e.add_argument("--cdf-grid", default="-7:5:121")
    e.add_argument("--X", type=float, default=0.3)
    e.add_argument("--Y", type=float, default=-0.4)
    e.add_argument("--ns", default="50,100,200")

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    mode = v.add_mutually_exclusive_group()
    mode.add_argument("--quick", dest="mode", action="store_const", const="quick")
    mode.add_argument("--full", dest="mode", action="store_const", const="full")
    v.add_argument("--only", default=None, help="comma list of criterion numbers")
    v.set_defaults(mode="full")
    return p


_NEGATIVE = re.compile(r"^-\.?\d")


def _attach_negative_values(argv):
    """Rewrite ``--grid -4:4:81`` as ``--grid=-4:4:81`` so argparse keeps it as a value."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv`` with ``--config`` values as defaults (explicit flags win)."""
    argv = _attach_negative_values(sys.argv[1:] if argv is None else list(argv))
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidParameter(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise InvalidParameter("config must be a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        cfg = {k.replace("-", "_"): val for k, val in cfg.items() if k != "command"}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise InvalidParameter(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# -- output ----------------------------------------------------------------------

def _resolved(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("config",)}


def _meta(args, t0, outputs, **extra) -> dict:
    return {"version": __version__, "command": args.command, "seed": args.seed,
            "params": _resolved(args), "wall_time_s": time.perf_counter() - t0,
            "outputs": [str(o) for o in outputs], **extra}


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def _emit(args, t0, tables: dict, **extra):
    """Write ``tables`` (name -> (header, rows)) as CSV files or one JSON document."""
    out = Path(args.out or f"{args.command}.{args.format}")
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        doc = _meta(args, t0, [out], **extra)
        doc["data"] = {name: {"header": h, "rows": [[experiments._jsonable(v) for v in r] for r in rows]}
                       for name, (h, rows) in tables.items()}
        out.write_text(json.dumps(doc, indent=1, default=experiments._jsonable))
        return [out]
    paths = []
    for i, (name, (header, rows)) in enumerate(tables.items()):
        p = out if i == 0 else out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
        write_csv(p, rows, header)
        paths.append(p)
    meta = _meta(args, t0, paths, **extra)
    _sidecar(out).write_text(json.dumps(meta, indent=1, default=experiments._jsonable))
    return paths


# -- commands --------------------------------------------------------------------

def cmd_sample(args) -> int:
    t0 = time.perf_counter()
    params = EnsembleParams(args.n, args.r, args.mu, args.sigma, args.seed)
    if args.form == "diag" and args.r != 1:
        raise InvalidParameter("--form diag needs r == 1")
    spectra = experiments.sample_spectra(params, args.draws, form=args.form, threads=args.threads)
    header = [f"lambda_{j + 1}" for j in range(spectra.shape[1])]
    _emit(args, t0, {"samples": (header, spectra)}, shape=list(spectra.shape))
    return 0


def cmd_kernel(args) -> int:
    t0 = time.perf_counter()
    spec = kernel.KernelSpec(args.n, args.mu, args.sigma2, args.path, args.eps_tail)
    x = parse_grid(args.grid)
    y = x if args.ygrid is None else parse_grid(args.ygrid)
    km = kernel.evaluate(spec, x[:, None], y[None, :])
    dens = kernel.density(spec, x)
    trap = float(trapezoid(dens, x)) if len(x) > 1 else float("nan")
    _emit(args, t0, {"matrix": (None, np.atleast_2d(km)), "diag": (["x", "density"], zip(x, dens))},
          x=x, y=y, trace_trapezoid=trap, expected_trace=spec.size)
    return 0


def cmd_phase(args) -> int:
    t0 = time.perf_counter()
    cs, s2s = parse_grid(args.c), parse_grid(args.sigma2)
    points = [(float(c), float(s2)) for s2 in s2s for c in cs]
    rows = experiments.phase_scan(points, args.n, args.draws, args.seed, args.threads)
    header = ["c", "sigma2", "phase", "mean_max", "se_max", "predicted_max",
              "mean_min", "se_min", "predicted_min", "gap"]
    table = [[r.c, r.sigma2, r.phase, r.mean_max, r.se_max, r.predicted_max,
              r.mean_min, r.se_min, r.predicted_min, r.gap] for r in rows]
    empirical = dict(experiments.phase_boundary(rows))
    # largest eigenvalue separates once sigma^2 + c > 2
    boundary = [[s2, empirical.get(float(s2), math.nan), 2.0 - s2] for s2 in s2s]
    _emit(args, t0, {"grid": (header, table),
                     "boundary": (["sigma2", "c_empirical", "c_predicted"], boundary)})
    return 0


def cmd_edge(args) -> int:
    t0 = time.perf_counter()
    tuning = {"c_hat": args.c_hat, "s1": args.s1} if args.path == "general" else {}
    grid = parse_grid(args.cdf_grid)
    rep = experiments.edge_fluctuation_experiment(args.path, args.n, args.s, args.draws, args.seed,
                                                  grid=grid, reference=args.reference,
                                                  threads=args.threads, **tuning)
    ns = [int(v) for v in parse_grid(args.ns)]
    conv = edge.finite_to_edge_convergence(args.path, args.X, args.Y, args.s, ns, **tuning)
    cdf = zip(rep.extra["grid"], rep.extra["cdf"], rep.extra["empirical_cdf"])
    _emit(args, t0, {"cdf": (["X", "cdf_reference", "cdf_empirical"], cdf),
                     "convergence": (["n", "finite", "limit", "deviation"],
                                     [[r.n, r.finite, r.limit, r.deviation] for r in conv.rows])},
          stats=rep.stats, resolved_mu=rep.params["mu"], resolved_sigma2=rep.params["sigma2"],
          convergence_decreasing=conv.decreasing)
    return 0


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    only = [int(v) for v in args.only.split(",")] if args.only else None
    if only and any(k < 1 or k > len(acceptance.CRITERIA) for k in only):
        raise InvalidParameter(f"criteria are numbered 1..{len(acceptance.CRITERIA)}")
    results = acceptance.run_suite(args.mode, args.seed, args.threads, only,
                                   echo=lambda line: print(line, flush=True))
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed "
          f"({args.mode}, {time.perf_counter() - t0:.0f} s)")
    if args.out:
        Path(args.out).write_text(json.dumps(
            _meta(args, t0, [args.out], passed=ok,
                  criteria=[{"number": r.number, "title": r.title, "passed": r.passed,
                             "summary": r.summary, "seconds": r.seconds, "metrics": r.metrics}
                            for r in results]),
            indent=1, default=experiments._jsonable))
    return 0 if ok else 1


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return globals()[f"cmd_{args.command}"](args)
    except BorderedGUEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
