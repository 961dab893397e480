"""Aluminium plate: SAFE phase velocities of A0, S0 and SH0 against Rayleigh-Lamb roots.

Usage: python scripts/lamb_check.py [n_plies] [order]
"""

import sys

import numpy as np
from scipy.optimize import brentq

from disperkit.assembly import Scales, assemble
from disperkit.eigensolve import solve_modes
from disperkit.materials import Layup, isotropic_material
from disperkit.mesh import build_plate_mesh

E, NU, RHO, C_T = 70e9, 0.33, 2700.0, 3040.0


def rayleigh_lamb(w, k, cl, cs, symmetric):
    """Rayleigh-Lamb function for half thickness 1, written to be real for any w."""
    p2, q2 = (w / cl) ** 2 - k * k, (w / cs) ** 2 - k * k

    def cos_(s):
        return np.cos(np.sqrt(s)) if s >= 0 else np.cosh(np.sqrt(-s))

    def sin_over(s):
        if s == 0:
            return 1.0
        return np.sin(np.sqrt(s)) / np.sqrt(s) if s > 0 else np.sinh(np.sqrt(-s)) / np.sqrt(-s)

    def sin_times(s):
        return np.sqrt(s) * np.sin(np.sqrt(s)) if s >= 0 else -np.sqrt(-s) * np.sinh(np.sqrt(-s))

    if symmetric:
        return (q2 - k * k) ** 2 * cos_(p2) * sin_over(q2) + 4 * k * k * sin_times(p2) * cos_(q2)
    return (q2 - k * k) ** 2 * sin_over(p2) * cos_(q2) + 4 * k * k * cos_(p2) * sin_times(q2)


def lowest_root(f, w_hi):
    ws = np.linspace(w_hi * 1e-4, w_hi, 4000)
    vals = np.array([f(w) for w in ws])
    i = int(np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0])
    return brentq(f, ws[i], ws[i + 1], xtol=1e-14)


def main(n_plies=8, order=4):
    mat = isotropic_material(E, NU, RHO)
    layup = Layup.from_angles([0.0] * n_plies, 0.25e-3, mat)
    a = layup.thickness / 2
    m = assemble(build_plate_mesh(layup, order, a), Scales(a, C_T))
    cl = np.sqrt(E * (1 - NU) / ((1 + NU) * (1 - 2 * NU)) / RHO) / C_T
    cs = np.sqrt(E / (2 * (1 + NU)) / RHO) / C_T
    print(f"{'k':>5} {'A0':>10} {'err':>8} {'S0':>10} {'err':>8} {'SH0':>10} {'err':>8}")
    for k in np.linspace(0.5, 5.0, 10):
        om = np.sqrt(np.clip(solve_modes(m, k, detect_clusters=False).eigenvalues, 0, None))
        refs = (lowest_root(lambda w: rayleigh_lamb(w, k, cl, cs, False), cs * k),
                lowest_root(lambda w: rayleigh_lamb(w, k, cl, cs, True), cl * k),
                cs * k)
        cells = []
        for w in refs:
            fe = om[np.argmin(np.abs(om - w))]
            cells.append(f"{w / k:10.6f} {abs(fe - w) / w:8.1e}")
        print(f"{k:5.2f} " + " ".join(cells))


if __name__ == "__main__":
    main(*(int(x) for x in sys.argv[1:3]))
