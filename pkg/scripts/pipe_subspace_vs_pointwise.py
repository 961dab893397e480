"""Pipe tracking with subspace MAC against pointwise (singleton) MAC.

Usage: python scripts/pipe_subspace_vs_pointwise.py [config.toml]
"""

import dataclasses
import sys
import time
from pathlib import Path

from disperkit.adaptive import run_adaptive
from disperkit.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main(path):
    cfg = load_config(path)
    m = cfg.build_matrices()
    for pointwise in (False, True):
        acfg = dataclasses.replace(cfg.adaptive, pointwise=pointwise)
        t0 = time.perf_counter()
        ds = run_adaptive(m, acfg)
        dims = sorted({c.d for s in ds.mode_sets for c in s.clusters})
        low = min((f["k_left"] for f in ds.flagged), default=None)
        print(f"{'pointwise' if pointwise else 'subspace':>9}: {len(ds.grid)} points, "
              f"max epsilon {ds.max_epsilon:.4f}, {len(ds.flagged)} flagged"
              + (f" (lowest at k={low:.4f})" if low is not None else "")
              + f", cluster sizes {dims}, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ROOT / "configs" / "pipe.toml")
