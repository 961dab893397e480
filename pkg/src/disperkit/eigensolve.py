"""Fixed-wavenumber eigensolves and degenerate-subspace detection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .assembly import stiffness_at, stiffness_derivative_at
from .errors import MassNotSPDError, SolverError

EPS_EIG = 1e-6
COUPLING_TOL = 1e-6


@dataclass(frozen=True)
class ModeWindow:
    """Retain eigenpairs with ``omega <= omega_max`` (all of them when None)."""

    omega_max: float | None = None

    @classmethod
    def from_velocity(cls, v_p_max, k_max):
        return cls(float(v_p_max) * float(k_max))

    @property
    def lambda_max(self):
        return None if self.omega_max is None else self.omega_max ** 2


@dataclass(frozen=True, eq=False)
class DegenerateCluster:
    """A tracked object: one mode (``d == 1``) or a degenerate subspace."""

    indices: tuple
    basis: np.ndarray

    @property
    def d(self):
        return len(self.indices)

    @property
    def is_degenerate(self):
        return self.d > 1


@dataclass(frozen=True, eq=False)
class ModeSet:
    k: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    mass: object
    clusters: tuple = field(default=())

    def __post_init__(self):
        if not self.clusters:
            singles = tuple(DegenerateCluster((i,), self.vectors[:, i:i + 1])
                            for i in range(len(self.eigenvalues)))
            object.__setattr__(self, "clusters", singles)

    @property
    def size(self):
        return len(self.eigenvalues)

    @property
    def omegas(self):
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None))

    def cluster_of(self, i):
        for c in self.clusters:
            if i in c.indices:
                return c
        raise IndexError(i)


def fix_phase(modes):
    """Rotate each vector so its largest-modulus entry is real and positive.

    Ties are broken by the lowest index, so the result depends only on the
    vector itself.
    """
    Q = np.array(modes.vectors, dtype=complex, copy=True)
    if Q.shape[1]:
        idx = np.argmax(np.abs(Q), axis=0)
        piv = Q[idx, np.arange(Q.shape[1])]
        Q *= (np.conj(piv) / np.abs(piv))[None, :]
        Q[idx, np.arange(Q.shape[1])] = np.abs(piv)
    clusters = tuple(
        DegenerateCluster(c.indices, Q[:, list(c.indices)]) if c.d == 1 else c
        for c in modes.clusters
    )
    return replace(modes, vectors=Q, clusters=clusters)


def relative_gap(l1, l2, floor):
    return abs(l1 - l2) / max(abs(l1), abs(l2), floor)


def gap_floor(eigenvalues):
    """Magnitude below which eigenvalues are compared absolutely."""
    top = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    return max(1e-12, 1e-8 * top)


def _m_orthonormalize(Q, M):
    """Symmetric (Loewdin) orthonormalisation in the ``M`` inner product."""
    G = Q.conj().T @ (M @ Q)
    w, V = np.linalg.eigh(0.5 * (G + G.conj().T))
    return Q @ (V * (1.0 / np.sqrt(w))) @ V.conj().T


def cluster_degenerate(modes, kprime, eps_eig=EPS_EIG, coupling_tol=COUPLING_TOL):
    """Group modes into symmetry-protected degenerate clusters.

    Modes ``i`` and ``j`` are merged when their relative eigenvalue gap is
    below ``eps_eig`` and ``|q_i^H K' q_j|`` is below ``coupling_tol`` times
    the spectral norm of ``K'`` projected on the retained modes. A small gap
    with strong coupling is a veering, not a degeneracy, and stays split.
    Clusters are the transitive closure of the pairwise merges.
    """
    lam = np.asarray(modes.eigenvalues)
    n = len(lam)
    Q = modes.vectors
    if n == 0:
        return replace(modes, clusters=())
    P = Q.conj().T @ (kprime @ Q)
    scale = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (P + P.conj().T)))))
    floor = gap_floor(lam)

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if relative_gap(lam[i], lam[j], floor) >= eps_eig:
                break  # sorted: later j are further away
            if abs(P[i, j]) < coupling_tol * scale:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for root in sorted(groups):
        idx = tuple(groups[root])
        B = Q[:, list(idx)]
        if len(idx) > 1:
            B = _m_orthonormalize(B, modes.mass)
        clusters.append(DegenerateCluster(idx, B))
    return replace(modes, clusters=tuple(clusters))


def solve_modes(m, k, window=None, eps_eig=EPS_EIG, coupling_tol=COUPLING_TOL,
                detect_clusters=True):
    """Eigenpairs of ``K(k) q = lam M q`` inside the frequency window.

    The mass matrix is factored once per ``SafeMatrices`` (``M = L L^T``);
    the standard Hermitian problem ``L^-1 K L^-H`` is solved densely, the
    vectors are mapped back, normalised in the ``M`` inner product,
    phase-fixed and, unless ``detect_clusters`` is False, grouped into
    degenerate clusters.
    """
    k = float(k)
    if not np.isfinite(k) or k < 0:
        raise SolverError("wavenumber must be finite and non-negative", k)
    L = m.cholesky
    if L is None:
        raise MassNotSPDError("mass matrix is not positive definite", k)
    window = window or ModeWindow()
    K = stiffness_at(m, k)
    X = sla.solve_triangular(L, K, lower=True)
    A = sla.solve_triangular(L, X.conj().T, lower=True).conj().T
    A = 0.5 * (A + A.conj().T)
    try:
        if window.lambda_max is None:
            lam, Y = sla.eigh(A)
        else:
            lam, Y = sla.eigh(A, subset_by_value=(-np.inf, window.lambda_max), driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"dense eigensolver failed: {exc}", k) from exc
    Q = sla.solve_triangular(L.T, Y, lower=False)
    norms = np.sqrt(np.real(np.einsum("ij,ij->j", Q.conj(), m.M @ Q)))
    Q = Q / norms[None, :]
    modes = fix_phase(ModeSet(k, np.asarray(lam, dtype=float), Q, m.M))
    if detect_clusters:
        modes = cluster_degenerate(modes, stiffness_derivative_at(m, k), eps_eig, coupling_tol)
    return modes


def residuals(m, modes):
    """Relative residuals ``||K q - lam M q|| / ||K||`` per retained mode."""
    if not modes.size:
        return np.zeros(0)
    K = stiffness_at(m, modes.k)
    R = K @ modes.vectors - (m.M @ modes.vectors) * modes.eigenvalues[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(K, 2)


def orthonormality_error(modes):
    """Largest entry of ``|Q^H M Q - I|``."""
    Q = modes.vectors
    if not Q.shape[1]:
        return 0.0
    return float(np.abs(Q.conj().T @ (modes.mass @ Q) - np.eye(Q.shape[1])).max())
