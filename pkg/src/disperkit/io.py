"""Dataset export: CSV curves, JSON diagnostics and a static SVG plot."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_HEADER = ("k", "branch", "omega", "vp", "cluster_dim")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")


def _num(x):
    return format(float(x), ".15g")


def dataset_rows(ds):
    """One ``(k, branch, omega, vp, cluster_dim)`` row per grid point and branch.

    A degenerate cluster is one branch; its frequency is the mean of its
    members. ``vp`` is ``None`` at ``k = 0``.
    """
    rows = []
    for b in ds.branches:
        for k, oms, d in zip(b.ks, b.omegas, b.dims):
            om = float(np.mean(oms))
            rows.append((float(k), b.label, om, om / k if k != 0 else None, int(d)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def write_csv(ds, path):
    lines = [",".join(CSV_HEADER)]
    for k, lab, om, vp, d in dataset_rows(ds):
        lines.append(",".join([_num(k), str(lab), _num(om),
                               "" if vp is None else _num(vp), str(d)]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


@dataclass(frozen=True)
class CurveRow:
    k: float
    branch: int
    omega: float
    vp: float | None
    cluster_dim: int


def read_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields")
            try:
                rows.append(CurveRow(float(rec[0]), int(rec[1]), float(rec[2]),
                                     float(rec[3]) if rec[3] else None, int(rec[4])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


def diagnostics_document(ds):
    return {
        "iterations": ds.iterations,
        "flagged": ds.flagged,
        "exceeded": bool(ds.exceeded),
        "solve_count": int(ds.solve_count),
        "grid_size": int(len(ds.grid)),
        "max_epsilon": ds.max_epsilon,
    }


def write_json(ds, path):
    text = json.dumps(diagnostics_document(ds), indent=1, sort_keys=True)
    Path(path).write_bytes((text + "\n").encode("ascii"))


def write_svg(ds, path, width=800, height=500, margin=60):
    rows = dataset_rows(ds)
    if rows:
        ks = [r[0] for r in rows]
        oms = [r[2] for r in rows]
        k0, k1 = min(ks), max(ks)
        w0, w1 = 0.0, max(oms) * 1.05 or 1.0
    else:
        k0, k1, w0, w1 = 0.0, 1.0, 0.0, 1.0
    k1 = k1 if k1 > k0 else k0 + 1.0
    sx = (width - 2 * margin) / (k1 - k0)
    sy = (height - 2 * margin) / (w1 - w0)

    def xy(k, om):
        return f"{margin + (k - k0) * sx:.2f},{height - margin - (om - w0) * sy:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<path d="M{margin},{margin} V{height - margin} H{width - margin}" '
           'stroke="black" fill="none"/>',
           f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle" '
           'font-size="14">k</text>',
           f'<text x="18" y="{height / 2}" text-anchor="middle" font-size="14" '
           f'transform="rotate(-90 18 {height / 2})">omega</text>',
           f'<text x="{margin}" y="{height - margin + 18}" font-size="11" '
           f'text-anchor="middle">{k0:.3g}</text>',
           f'<text x="{width - margin}" y="{height - margin + 18}" font-size="11" '
           f'text-anchor="middle">{k1:.3g}</text>',
           f'<text x="{margin - 6}" y="{margin + 4}" font-size="11" '
           f'text-anchor="end">{w1:.3g}</text>']
    for idx, b in enumerate(ds.branches):
        pts = " ".join(xy(k, float(np.mean(o))) for k, o in zip(b.ks, b.omegas))
        dash = ' stroke-dasharray="6,3"' if b.d > 1 else ""
        out.append(f'<polyline data-branch="{b.label}" points="{pts}" fill="none" '
                   f'stroke="{PALETTE[idx % len(PALETTE)]}" stroke-width="1.2"{dash}/>')
    out.append("</svg>")
    Path(path).write_bytes(("\n".join(out) + "\n").encode("ascii"))
