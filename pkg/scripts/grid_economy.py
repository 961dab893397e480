"""Adaptive grid size against uniform grids halved from the coarse step.

Usage: python scripts/grid_economy.py [config.toml]   (default: symmetric laminate)
"""

import sys
import time
from pathlib import Path

import numpy as np

from disperkit.adaptive import run_adaptive, uniform_sweep
from disperkit.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main(path):
    cfg = load_config(path)
    m = cfg.build_matrices()
    acfg = cfg.adaptive
    t0 = time.perf_counter()
    ds = run_adaptive(m, acfg)
    print(f"adaptive: {len(ds.grid)} points, max epsilon {ds.max_epsilon:.4f}, "
          f"{len(ds.flagged)} flagged, {time.perf_counter() - t0:.1f} s")
    step = (acfg.k_max - acfg.k_min) / (acfg.N0 - 1)
    print(f"{'step':>12} {'points':>7} {'max eps':>8} {'seconds':>8}")
    while True:
        n = int(round((acfg.k_max - acfg.k_min) / step)) + 1
        t0 = time.perf_counter()
        sweep = uniform_sweep(m, np.linspace(acfg.k_min, acfg.k_max, n), acfg)
        print(f"{step:12.6g} {n:7d} {sweep.max_epsilon:8.4f} {time.perf_counter() - t0:8.1f}")
        if sweep.max_epsilon <= acfg.eps_bar or step / 2 < acfg.delta_k_min:
            break
        step /= 2
    if sweep.max_epsilon <= acfg.eps_bar:
        print(f"savings: {100 * (1 - len(ds.grid) / n):.0f}% ({len(ds.grid)} vs {n})")
    else:
        print("no uniform grid down to delta_k_min reached eps_bar")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ROOT / "configs" / "symmetric_laminate.toml")
