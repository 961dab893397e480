"""Command-line front end: ``trace``, ``sweep``, ``verify`` and ``compare``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from .adaptive import run_adaptive, uniform_sweep
from .config import load_config
from .eigensolve import solve_modes
from .errors import ConfigError, DisperkitError
from .io import read_csv, write_csv, write_json, write_svg
from .perturbation import verify_point

log = logging.getLogger("disperkit")

EXIT_OK, EXIT_ERROR, EXIT_FLAGGED = 0, 1, 2


def parse_grid(text):
    """``a:b:step`` -> ``round((b - a) / step) + 1`` evenly spaced points."""
    try:
        a, b, step = (float(s) for s in text.split(":"))
    except ValueError:
        raise ConfigError(f"--grid: expected a:b:step, got {text!r}") from None
    if not (step > 0 and b > a):
        raise ConfigError(f"--grid: need b > a and step > 0, got {text!r}")
    n = int(round((b - a) / step)) + 1
    if n < 2:
        raise ConfigError(f"--grid: {text!r} gives fewer than two points")
    return np.linspace(a, b, n)


def _write_outputs(cfg, ds, out, svg):
    out = Path(out if out is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    stem = cfg.output.stem
    write_csv(ds, out / f"{stem}.csv")
    write_json(ds, out / f"{stem}.json")
    if svg or cfg.output.svg:
        write_svg(ds, out / f"{stem}.svg")
    return out / f"{stem}.csv"


def _report(ds, csv_path):
    print(f"grid points: {len(ds.grid)}  branches: {len(ds.branches)}  "
          f"eigensolves: {ds.solve_count}")
    print(f"max epsilon: {ds.max_epsilon:.6g}")
    if ds.flagged:
        print(f"flagged intervals: {len(ds.flagged)}")
        for f in ds.flagged[:10]:
            print(f"  [{f['k_left']:.6g}, {f['k_right']:.6g}]  epsilon={f['epsilon']:.4g}")
    if ds.exceeded:
        print("warning: iteration limit reached before convergence")
    print(f"wrote {csv_path}")


def cmd_trace(args):
    cfg = load_config(args.config)
    m = cfg.build_matrices()
    ds = run_adaptive(m, cfg.adaptive, threads=args.threads)
    path = _write_outputs(cfg, ds, args.out, args.svg)
    _report(ds, path)
    return EXIT_FLAGGED if ds.flagged or ds.exceeded else EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    grid = parse_grid(args.grid)
    m = cfg.build_matrices()
    ds = uniform_sweep(m, grid, cfg.adaptive, threads=args.threads)
    path = _write_outputs(cfg, ds, args.out, args.svg)
    _report(ds, path)
    return EXIT_FLAGGED if ds.flagged else EXIT_OK


def _fmt(x, width=10):
    return f"{'-':>{width}}" if np.isnan(x) else f"{x:>{width}.3e}"


def cmd_verify(args):
    cfg = load_config(args.config)
    m = cfg.build_matrices()
    ad = cfg.adaptive
    lam_max = ad.window.lambda_max or np.inf
    ks = np.linspace(ad.k_min, ad.k_max, args.samples)
    print(f"{'k':>8} {'mode':>4} {'dq err':>10} {'|dq|^2 err':>10} {'j':>3} "
          f"{'|c|^2 err':>10} {'HF err':>10}  status")
    ok = True
    for k in ks:
        lam = solve_modes(m, k, detect_clusters=False).eigenvalues
        inside = np.flatnonzero(lam <= lam_max)[: args.modes]
        for row in verify_point(m, float(k), inside):
            if row.skipped:
                print(f"{row.k:>8.4f} {row.i:>4d}  skipped ({row.skipped})")
                continue
            passed = row.passed()
            ok &= passed
            print(f"{row.k:>8.4f} {row.i:>4d} {_fmt(row.derivative_error)} "
                  f"{_fmt(row.taylor_self_error)} {row.j:>3d} {_fmt(row.taylor_cross_error)} "
                  f"{_fmt(row.slope_error)}  {'ok' if passed else 'FAIL'}")
    print("all checks within tolerance" if ok else "some checks exceeded tolerance")
    return EXIT_OK if ok else EXIT_ERROR


def _by_point(rows):
    table = defaultdict(dict)
    for r in rows:
        table[r.k].setdefault(r.branch, []).append(r.omega)
    return table


def cmd_compare(args):
    try:
        a, b = read_csv(args.a), read_csv(args.b)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    ta, tb = _by_point(a), _by_point(b)
    if not ta or not tb:
        raise ConfigError("both datasets need at least one row")
    na, nb = len(ta[min(ta)]), len(tb[min(tb)])
    print(f"grid sizes: A={len(ta)}  B={len(tb)}")
    if na != nb:
        print(f"error: branch counts at k_min differ (A={na}, B={nb})", file=sys.stderr)
        return EXIT_ERROR
    shared = sorted(set(ta) & set(tb))
    agree = total = 0
    max_dw = 0.0
    for k in shared:
        rb = [(om, lab) for lab, oms in tb[k].items() for om in oms]
        for lab, oms in ta[k].items():
            for om in oms:
                total += 1
                nearest = min(rb, key=lambda p: (abs(p[0] - om), p[1]))
                agree += nearest[1] == lab
            if lab in tb[k] and len(tb[k][lab]) == len(oms):
                dw = np.abs(np.sort(oms) - np.sort(tb[k][lab])).max()
                max_dw = max(max_dw, float(dw))
    pct = 100.0 * agree / total if total else float("nan")
    print(f"shared grid points: {len(shared)}")
    print(f"label agreement: {pct:.2f}%")
    print(f"max |domega|: {max_dw:.6g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="disperkit", description="SAFE dispersion tracing")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trace", help="adaptive dispersion trace")
    t.add_argument("config")
    t.add_argument("--out", default=None)
    t.add_argument("--svg", action="store_true")
    t.add_argument("--threads", type=int, default=1)
    t.set_defaults(func=cmd_trace)

    s = sub.add_parser("sweep", help="tracking on a fixed uniform grid")
    s.add_argument("config")
    s.add_argument("--grid", required=True, help="a:b:step")
    s.add_argument("--out", default=None)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="perturbation checks against finite differences")
    v.add_argument("config")
    v.add_argument("--samples", type=int, default=5)
    v.add_argument("--modes", type=int, default=6, help="lowest retained modes checked per k")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compare", help="compare two dataset CSV files")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    level = os.environ.get("DISPERKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    if getattr(args, "samples", 1) < 1:
        print("error: --samples must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except DisperkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
