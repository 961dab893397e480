"""Adaptive wavenumber refinement driven by the tracking error indicator."""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .eigensolve import COUPLING_TOL, EPS_EIG, ModeWindow, solve_modes
from .errors import ContractViolation, StructuralError
from .tracking import match_interval

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdaptiveConfig:
    k_min: float
    k_max: float
    v_p_max: float | None = None
    eps_bar: float = 0.05
    delta_k_min: float = 1e-3
    N0: int = 20
    eps_eig: float = EPS_EIG
    coupling_tol: float = COUPLING_TOL
    max_iterations: int = 30
    pointwise: bool = False

    def __post_init__(self):
        if not self.k_min < self.k_max:
            raise ContractViolation(f"k_min ({self.k_min}) must be below k_max ({self.k_max})")
        if self.k_min < 0:
            raise ContractViolation(f"k_min must be non-negative, got {self.k_min}")
        if int(self.N0) != self.N0 or self.N0 < 2:
            raise ContractViolation(f"N0 must be an integer >= 2, got {self.N0}")
        if not 0 < self.delta_k_min < (self.k_max - self.k_min) / self.N0:
            raise ContractViolation("delta_k_min must lie in (0, (k_max - k_min) / N0)")
        if not 0 < self.eps_bar < 2:
            raise ContractViolation(f"eps_bar must lie in (0, 2), got {self.eps_bar}")
        if self.v_p_max is not None and not self.v_p_max > 0:
            raise ContractViolation(f"v_p_max must be positive, got {self.v_p_max}")
        if self.max_iterations < 0:
            raise ContractViolation("max_iterations must be non-negative")

    @property
    def window(self):
        if self.v_p_max is None:
            return ModeWindow()
        return ModeWindow.from_velocity(self.v_p_max, self.k_max)

    def initial_grid(self):
        return np.linspace(self.k_min, self.k_max, int(self.N0))

    def bisection_bound(self):
        """Bisections needed for the initial step to fall to ``delta_k_min``."""
        step = (self.k_max - self.k_min) / (self.N0 - 1)
        return max(0, math.ceil(math.log2(step / self.delta_k_min)))


@dataclass
class Branch:
    label: int
    ks: list = field(default_factory=list)
    omegas: list = field(default_factory=list)  # tuple of member frequencies per point
    dims: list = field(default_factory=list)

    @property
    def d(self):
        return max(self.dims) if self.dims else 1


@dataclass
class DispersionDataset:
    grid: np.ndarray
    branches: list
    matches: list
    mode_sets: list
    iterations: list = field(default_factory=list)
    flagged: list = field(default_factory=list)
    exceeded: bool = False
    solve_count: int = 0

    @property
    def epsilons(self):
        return np.array([mt.epsilon for mt in self.matches])

    @property
    def max_epsilon(self):
        return float(self.epsilons.max()) if self.matches else 0.0

    def branch(self, label):
        return next(b for b in self.branches if b.label == label)

    def rows(self):
        """``(k, branch, omega, cluster_dim)`` rows sorted by k, branch, omega."""
        rows = []
        for b in self.branches:
            for k, oms, d in zip(b.ks, b.omegas, b.dims):
                rows.extend((k, b.label, om, d) for om in oms)
        rows.sort()
        return rows

    def diagnostics(self):
        return {
            "iterations": self.iterations,
            "exceeded": self.exceeded,
            "solve_count": self.solve_count,
            "flagged": self.flagged,
        }


class SolveCache:
    """Thread-safe memo of ``solve_modes`` keyed by the exact wavenumber."""

    def __init__(self, m, window, eps_eig=EPS_EIG, coupling_tol=COUPLING_TOL):
        self.m = m
        self.window = window
        self.eps_eig = eps_eig
        self.coupling_tol = coupling_tol
        self._store = {}
        self._lock = threading.Lock()
        self.solves = 0

    def _solve(self, k):
        return solve_modes(self.m, k, self.window, self.eps_eig, self.coupling_tol)

    def get_many(self, ks, pool=None):
        todo = sorted({float(k) for k in ks if float(k) not in self._store})
        if todo:
            results = list(pool.map(self._solve, todo)) if pool else [self._solve(k) for k in todo]
            with self._lock:
                for k, r in zip(todo, results):
                    self._store[k] = r
                self.solves += len(todo)
        return [self._store[float(k)] for k in ks]


@contextmanager
def _workers(threads):
    """Executor for ``threads > 1`` with BLAS pinned to one thread either way.

    Pinning keeps every eigensolve bit-identical regardless of how many
    wavenumbers run concurrently.
    """
    with threadpool_limits(limits=1):
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=int(threads)) as pool:
                yield pool
        else:
            yield None


def _match_all(pairs, pool, pointwise):
    fn = lambda lr: match_interval(lr[0], lr[1], pointwise)  # noqa: E731
    return list(pool.map(fn, pairs)) if pool else [fn(p) for p in pairs]


def _interval_record(mt, refined, flagged):
    return {"k_left": mt.k_left, "k_right": mt.k_right, "epsilon": mt.epsilon,
            "refined": bool(refined), "flagged": bool(flagged)}


def _flag_record(mt):
    return {"k_left": mt.k_left, "k_right": mt.k_right, "epsilon": mt.epsilon,
            "hungarian_cost": mt.hungarian_cost, "swap_cost": mt.swap_cost}


def run_adaptive(m, cfg, threads=1):
    """Refine the wavenumber grid until every interval is tracked reliably.

    Each iteration matches all intervals of the current grid; those with
    ``epsilon > eps_bar`` longer than ``delta_k_min`` are bisected together,
    shorter ones are flagged. Eigensolves happen once per distinct grid
    point. If refinement is still requested after ``max_iterations`` rounds
    the partial result is returned with ``exceeded`` set.
    """
    cache = SolveCache(m, cfg.window, cfg.eps_eig, cfg.coupling_tol)
    grid = [float(k) for k in cfg.initial_grid()]
    iterations = []
    matches_by_interval = {}
    exceeded = False
    with _workers(threads) as pool:
        for it in range(cfg.max_iterations + 1):
            sets = cache.get_many(grid, pool)
            todo = [(a, b) for a, b in zip(sets[:-1], sets[1:])
                    if (a.k, b.k) not in matches_by_interval]
            for mt in _match_all(todo, pool, cfg.pointwise):
                matches_by_interval[(mt.k_left, mt.k_right)] = mt
            current = [matches_by_interval[(a, b)] for a, b in zip(grid[:-1], grid[1:])]
            bad = [mt.epsilon > cfg.eps_bar for mt in current]
            refine = [b and (mt.k_right - mt.k_left) > cfg.delta_k_min
                      for b, mt in zip(bad, current)]
            flagged = [b and not r for b, r in zip(bad, refine)]
            if it == cfg.max_iterations and any(refine):
                exceeded = True
                refine = [False] * len(current)
            iterations.append({"grid": list(grid),
                               "intervals": [_interval_record(mt, r, f)
                                             for mt, r, f in zip(current, refine, flagged)]})
            log.info("iteration %d: %d points, %d refined, %d flagged",
                     it, len(grid), sum(refine), sum(flagged))
            if not any(refine):
                break
            mids = [0.5 * (mt.k_left + mt.k_right) for mt, r in zip(current, refine) if r]
            grid = sorted(grid + mids)
    if exceeded:
        log.warning("adaptive loop stopped after %d iterations", cfg.max_iterations)
    ds = assemble_dataset(grid, sets, current, cfg.pointwise)
    ds.iterations = iterations
    ds.flagged = [_flag_record(mt) for mt, f in zip(current, flagged) if f]
    ds.exceeded = exceeded
    ds.solve_count = cache.solves
    return ds


def uniform_sweep(m, grid, cfg=None, threads=1):
    """Match every interval of a fixed grid without refinement.

    When ``cfg`` is given, its window, degeneracy thresholds and
    ``pointwise`` flag are used, and intervals with ``epsilon > eps_bar``
    are reported as flagged.
    """
    grid = [float(k) for k in grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ContractViolation("grid must be strictly increasing with at least two points")
    window = cfg.window if cfg else ModeWindow()
    eps_eig = cfg.eps_eig if cfg else EPS_EIG
    ctol = cfg.coupling_tol if cfg else COUPLING_TOL
    pointwise = cfg.pointwise if cfg else False
    eps_bar = cfg.eps_bar if cfg else np.inf
    cache = SolveCache(m, window, eps_eig, ctol)
    with _workers(threads) as pool:
        sets = cache.get_many(grid, pool)
        matches = _match_all(list(zip(sets[:-1], sets[1:])), pool, pointwise)
    ds = assemble_dataset(grid, sets, matches, pointwise)
    flagged = [mt.epsilon > eps_bar for mt in matches]
    ds.iterations = [{"grid": list(grid),
                      "intervals": [_interval_record(mt, False, f)
                                    for mt, f in zip(matches, flagged)]}]
    ds.flagged = [_flag_record(mt) for mt, f in zip(matches, flagged) if f]
    ds.solve_count = cache.solves
    return ds


def _objects(modes, pointwise):
    if pointwise:
        return [(i,) for i in range(modes.size)]
    return [c.indices for c in modes.clusters]


def assemble_dataset(grid, mode_sets, matches, pointwise=None):
    """Propagate branch labels left to right through the interval assignments.

    Objects at the first grid point are labelled ``0, 1, ...`` in eigenvalue
    order; right-hand objects left unmatched by an interval start new
    branches with fresh labels, also in eigenvalue order.
    """
    grid = [float(k) for k in grid]
    if len(mode_sets) != len(grid) or len(matches) != len(grid) - 1:
        raise StructuralError("need one mode set per grid point and one match per interval")
    for i, mt in enumerate(matches):
        if mt.k_left != grid[i] or mt.k_right != grid[i + 1]:
            raise StructuralError(
                f"interval {i} spans ({mt.k_left}, {mt.k_right}), "
                f"expected ({grid[i]}, {grid[i + 1]})")
    for k, ms in zip(grid, mode_sets):
        if float(ms.k) != k:
            raise StructuralError(f"mode set at k={ms.k} does not sit on grid point {k}")
    if pointwise is None:
        pointwise = _infer_pointwise(mode_sets, matches)

    branches = {}

    def add(label, k, modes, obj):
        b = branches.setdefault(label, Branch(label))
        b.ks.append(k)
        b.omegas.append(tuple(float(modes.omegas[i]) for i in obj))
        b.dims.append(len(obj))

    objs = _objects(mode_sets[0], pointwise)
    labels = list(range(len(objs)))
    for lab, obj in zip(labels, objs):
        add(lab, grid[0], mode_sets[0], obj)
    next_label = len(labels)
    for p, mt in enumerate(matches):
        right = mode_sets[p + 1]
        robjs = _objects(right, pointwise)
        new = [None] * len(robjs)
        for i, j in mt.assignment:
            new[j] = labels[i]
        for j in range(len(robjs)):
            if new[j] is None:
                new[j] = next_label
                next_label += 1
            add(new[j], grid[p + 1], right, robjs[j])
        labels = new
    return DispersionDataset(np.array(grid), [branches[k] for k in sorted(branches)],
                             list(matches), list(mode_sets))


def _infer_pointwise(mode_sets, matches):
    """Matches built pointwise have one MAC row per mode rather than per cluster."""
    for ms, mt in zip(mode_sets, matches):
        if len(ms.clusters) != ms.size:
            return mt.mac_matrix.shape[0] == ms.size
    return False
