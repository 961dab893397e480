"""Mode matching between neighbouring wavenumbers.

Objects are the clusters of a :class:`~disperkit.eigensolve.ModeSet`: a
single mode, or a degenerate subspace compared through the subspace MAC.
The separation ``D`` of a matched pair is its MAC minus the best competing
MAC in its row and in its column; ``epsilon = 1 - min D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, StructuralError

NORM_TOL = 1e-6


def mac(q_a, q_b, M):
    """Modal assurance criterion ``|q_a^H M q_b|^2`` of two M-normalised vectors."""
    q_a = np.asarray(q_a).ravel()
    q_b = np.asarray(q_b).ravel()
    Mb = M @ q_b
    Ma = M @ q_a
    for name, q, Mq in (("q_a", q_a, Ma), ("q_b", q_b, Mb)):
        nrm = np.real(np.vdot(q, Mq))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ContractViolation(f"{name} is not M-normalised (q^H M q = {nrm:.3g})")
    return float(abs(np.vdot(q_a, Mb)) ** 2)


def _check_basis(Q, M, name):
    G = Q.conj().T @ M @ Q
    err = np.abs(G - np.eye(Q.shape[1])).max() if Q.shape[1] else 0.0
    if err > NORM_TOL:
        raise ContractViolation(f"{name} is not M-orthonormal (deviation {err:.3g})")


def subspace_mac(Q_a, Q_b, M):
    """``||Q_a^H M Q_b||_F^2 / max(d_a, d_b)`` for M-orthonormal bases.

    Invariant under unitary changes of basis on either side and equal to
    :func:`mac` when both bases are single vectors.
    """
    Q_a = np.asarray(Q_a).reshape(len(Q_a), -1)
    Q_b = np.asarray(Q_b).reshape(len(Q_b), -1)
    _check_basis(Q_a, M, "Q_a")
    _check_basis(Q_b, M, "Q_b")
    G = Q_a.conj().T @ M @ Q_b
    return float(np.sum(np.abs(G) ** 2) / max(Q_a.shape[1], Q_b.shape[1]))


def objects(modes, pointwise=False):
    """Tracked objects of ``modes``: its clusters, or every mode alone if ``pointwise``."""
    if pointwise:
        return [((i,), modes.vectors[:, i:i + 1]) for i in range(modes.size)]
    return [(c.indices, c.basis) for c in modes.clusters]


def mac_matrix(left, right, pointwise=False):
    """Object-level MAC matrix; clusters use the subspace MAC."""
    if left.vectors.shape[0] != right.vectors.shape[0]:
        raise StructuralError(
            f"DOF mismatch: {left.vectors.shape[0]} vs {right.vectors.shape[0]}")
    if left.mass is not right.mass and left.mass.shape != right.mass.shape:
        raise StructuralError("mode sets come from different mass matrices")
    lo, ro = objects(left, pointwise), objects(right, pointwise)
    if not lo or not ro:
        return np.zeros((len(lo), len(ro)))
    BL = np.hstack([b for _, b in lo])
    BR = np.hstack([b for _, b in ro])
    P = np.abs(BL.conj().T @ (left.mass @ BR)) ** 2
    dl = np.array([len(i) for i, _ in lo])
    dr = np.array([len(i) for i, _ in ro])
    # sum |G|^2 over each (left object, right object) block
    rows = np.add.reduceat(P, np.concatenate(([0], np.cumsum(dl)[:-1])), axis=0)
    S = np.add.reduceat(rows, np.concatenate(([0], np.cumsum(dr)[:-1])), axis=1)
    return np.clip(S / np.maximum.outer(dl, dr), 0.0, 1.0)


def cost_matrix(left, right, pointwise=False):
    """``C = 1 - MAC`` between the objects of two mode sets."""
    return 1.0 - mac_matrix(left, right, pointwise)


def _assign_rows(a):
    """Minimum-cost assignment of every row of ``a`` (rows <= cols).

    Shortest augmenting path with dual potentials; returns ``col_of_row``.
    Strict comparisons make ties resolve towards the lowest column index.
    """
    n, m = a.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=int)  # p[j]: 1-based row matched to column j
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = np.flatnonzero(~used[1:]) + 1
            cur = a[i0 - 1, free - 1] - u[i0] - v[free]
            better = cur < minv[free]
            minv[free[better]] = cur[better]
            way[free[better]] = j0
            pick = int(np.argmin(minv[free]))
            delta, j1 = minv[free][pick], int(free[pick])
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=int)
    for j in range(1, m + 1):
        if p[j]:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row


def hungarian(cost):
    """Optimal injective assignment for a rectangular cost matrix.

    Returns ``min(M, N)`` pairs ``(i, j)`` sorted by left index ``i``.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ContractViolation("cost must be a 2-D matrix")
    if not np.all(np.isfinite(cost)):
        raise ContractViolation("cost entries must be finite")
    m, n = cost.shape
    if m == 0 or n == 0:
        return []
    if m <= n:
        cols = _assign_rows(cost)
        pairs = [(i, int(cols[i])) for i in range(m)]
    else:
        rows = _assign_rows(cost.T)
        pairs = sorted((int(rows[j]), j) for j in range(n))
    return pairs


def assignment_cost(cost, pairs):
    return float(sum(cost[i, j] for i, j in pairs))


def separations_from_mac(S, pairs):
    """Row and column MAC separations for matched pairs of the MAC matrix ``S``.

    Returns ``(D, D_row, D_col)`` arrays aligned with ``pairs``. The best
    competitor of a pair with no other candidates counts as MAC 0.
    """
    S = np.asarray(S)
    D_row, D_col = [], []
    for i, j in pairs:
        row = np.delete(S[i], j)
        col = np.delete(S[:, j], i)
        D_row.append(S[i, j] - (row.max() if row.size else 0.0))
        D_col.append(S[i, j] - (col.max() if col.size else 0.0))
    D_row, D_col = np.array(D_row), np.array(D_col)
    return np.minimum(D_row, D_col), D_row, D_col


def mac_separation(left, right, assignment, pointwise=False):
    """MAC separation ``D = min(D_row, D_col)`` of every matched object."""
    S = mac_matrix(left, right, pointwise)
    return separations_from_mac(S, assignment)[0]


def error_indicator(Ds):
    """``1 - min(D)``."""
    Ds = np.asarray(Ds, dtype=float)
    if Ds.size == 0:
        raise ContractViolation("error indicator needs at least one separation")
    return float(1.0 - Ds.min())


@dataclass(frozen=True, eq=False)
class IntervalMatch:
    k_left: float
    k_right: float
    assignment: tuple
    mac_matrix: np.ndarray
    separations: np.ndarray
    epsilon: float
    hungarian_cost: float
    swap_cost: float | None = None

    def right_of(self, i):
        for a, b in self.assignment:
            if a == i:
                return b
        return None


def _swap_cost(S, pairs, D_row, D_col):
    """Total cost after swapping the weakest pair with its strongest competitor."""
    if not pairs:
        return None
    C = 1.0 - S
    w = int(np.argmin(np.minimum(D_row, D_col)))
    i, j = pairs[w]
    match = dict(pairs)
    if D_row[w] <= D_col[w]:
        others = [c for c in range(S.shape[1]) if c != j]
        if not others:
            return None
        jj = max(others, key=lambda c: (S[i, c], -c))
        owner = next((a for a, b in pairs if b == jj), None)
        match[i] = jj
        if owner is not None:
            match[owner] = j
    else:
        others = [r for r in range(S.shape[0]) if r != i]
        if not others:
            return None
        ii = max(others, key=lambda r: (S[r, j], -r))
        if ii in match:
            match[ii], match[i] = j, match[ii]
        else:
            del match[i]
            match[ii] = j
    return assignment_cost(C, match.items())


def match_interval(left, right, pointwise=False):
    """Cost matrix, optimal assignment, separations and epsilon for one interval.

    With ``pointwise=True`` degenerate clusters are ignored and every mode is
    compared with the ordinary MAC.
    """
    S = mac_matrix(left, right, pointwise)
    C = 1.0 - S
    pairs = hungarian(C)
    D, D_row, D_col = separations_from_mac(S, pairs)
    eps = error_indicator(D) if len(D) else 0.0
    return IntervalMatch(
        k_left=float(left.k), k_right=float(right.k), assignment=tuple(pairs),
        mac_matrix=S, separations=D, epsilon=eps,
        hungarian_cost=assignment_cost(C, pairs),
        swap_cost=_swap_cost(S, pairs, D_row, D_col),
    )
