"""Mesh-doubling check: lowest eigenvalues of a config against a refined copy.

Usage: python scripts/mesh_convergence.py config.toml [--k 0.5] [--modes 30] [--factor 2]

Doubles every element-count parameter of the geometry section (``n_thick``,
``n_y``, ``n_z`` for an L-section, ``n_circ``, ``n_rad`` for an annulus, plates are
refined through their GLL order and are not handled here) and reports the largest relative eigenvalue change among the lowest modes.
"""

import argparse
import sys
import time

import numpy as np
import scipy.linalg as sla

from disperkit.assembly import stiffness_at
from disperkit.config import load_config, parse_config

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COUNTS = {"lshape": ("n_thick", "n_y", "n_z"), "annulus": ("n_circ", "n_rad")}


def lowest(m, k, n):
    n = min(n, m.n)
    return sla.eigh(stiffness_at(m, k), m.M_dense, eigvals_only=True, subset_by_index=[0, n - 1])


def refined(data, geometry, mesh, factor):
    table = dict(data[geometry])
    for key in COUNTS.get(geometry, ()):
        table[key] = factor * int(table.get(key) or mesh.meta[key])
    return {**data, geometry: table}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--k", type=float, default=0.5)
    p.add_argument("--modes", type=int, default=30)
    p.add_argument("--factor", type=int, default=2)
    args = p.parse_args(argv)

    cfg = load_config(args.config)
    if cfg.geometry not in COUNTS:
        p.error(f"only {', '.join(COUNTS)} geometries have element counts to refine")
    with open(args.config, "rb") as fh:
        data = tomllib.load(fh)
    fine_cfg = parse_config(refined(data, cfg.geometry, cfg.build_mesh(), args.factor),
                            cfg.source)
    rows = []
    for c in (cfg, fine_cfg):
        t0 = time.perf_counter()
        m = c.build_matrices()
        rows.append((m.n, lowest(m, args.k, args.modes), time.perf_counter() - t0))
    (n0, l0, t0), (n1, l1, t1) = rows
    n = min(len(l0), len(l1))
    rel = np.abs(l0[:n] - l1[:n]) / np.abs(l1[:n])
    print(f"default: {n0} dofs ({t0:.1f} s); refined x{args.factor}: {n1} dofs ({t1:.1f} s)")
    print(f"lowest {n} eigenvalues at k={args.k}: max relative change {rel.max():.2e}, "
          f"median {np.median(rel):.2e}")


if __name__ == "__main__":
    main()
