"""SAFE matrix assembly.

With a displacement field ``u = N(y, z) q exp(i (k x - w t))`` the strain
is ``(B0 + i k B1) q``, which gives the Hermitian stiffness family

    K(k) = K1 + i k K2 + k^2 K3,   K2 = int(B0^T C B1 - B1^T C B0) dA.

Everything is made dimensionless before assembly: lengths by ``a`` (the
mesh is already normalised), stiffnesses by ``rho_ref * c_T**2`` and
densities by ``rho_ref``, the density of the first material. Eigenvalues
of ``K(k) q = lam M q`` are then ``lam = (w a / c_T)**2`` at wavenumber
``k a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import QUAD9
from .shapes import gll_points, lagrange_basis, quad9_rule


@dataclass(frozen=True)
class Scales:
    a: float = 1.0
    c_T: float = 1.0


@dataclass(frozen=True)
class ElementKernels:
    """Per-quadrature-point operators of one element batch.

    ``B0``/``B1`` have shape ``(E, Q, 6, 3n)``, ``N`` has shape
    ``(E, Q, 3, 3n)`` and ``weights`` (weight times Jacobian) ``(E, Q)``.
    """

    B0: np.ndarray
    B1: np.ndarray
    N: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class SafeMatrices:
    K1: sp.csr_matrix
    K2: sp.csr_matrix
    K3: sp.csr_matrix
    M: sp.csr_matrix
    scales: Scales = field(default_factory=Scales)
    mesh: object = None

    @classmethod
    def from_arrays(cls, K1, K2, K3, M, scales=None):
        """Wrap already dimensionless matrices, checking their symmetry classes."""
        mats = [sp.csr_matrix(np.asarray(A.toarray() if sp.issparse(A) else A, dtype=float))
                for A in (K1, K2, K3, M)]
        n = mats[0].shape[0]
        for name, A, sign in zip(("K1", "K2", "K3", "M"), mats, (1, -1, 1, 1)):
            if A.shape != (n, n):
                raise AssemblyError(f"{name} has shape {A.shape}, expected {(n, n)}")
            scale = max(abs(A).max(), 1.0) if A.nnz else 1.0
            if A.nnz and abs(A - sign * A.T).max() > 1e-12 * scale:
                kind = "skew-symmetric" if sign < 0 else "symmetric"
                raise AssemblyError(f"{name} must be {kind}")
        return cls(*mats, scales=scales or Scales())

    @property
    def n(self):
        return self.M.shape[0]

    @cached_property
    def cholesky(self):
        """Lower Cholesky factor of the dense mass matrix, or None if ``M`` is not SPD."""
        try:
            return np.linalg.cholesky(self.M_dense)
        except np.linalg.LinAlgError:
            return None

    @cached_property
    def dense(self):
        """Dense copies ``(K1, K2, K3)`` reused by every wavenumber evaluation."""
        return tuple(np.asarray(A.toarray()) for A in (self.K1, self.K2, self.K3))

    @cached_property
    def M_dense(self):
        return self.M.toarray()

    def export_triplets(self, directory):
        """Write ``K1.txt``, ``K2.txt``, ``K3.txt``, ``M.txt`` as ``i j value`` lines."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name in ("K1", "K2", "K3", "M"):
            A = getattr(self, name).tocoo()
            order = np.lexsort((A.col, A.row))
            with open(directory / f"{name}.txt", "w", encoding="ascii", newline="\n") as fh:
                for i, j, v in zip(A.row[order], A.col[order], A.data[order]):
                    fh.write(f"{i} {j} {float(v)!r}\n")


def _strain_operators(N, dNy, dNz):
    """Build ``B0``, ``B1`` and the displacement interpolation ``Nmat``.

    Inputs have shape ``(..., n)``; outputs ``(..., 6, 3n)`` and ``(..., 3, 3n)``.
    Voigt rows are ``(xx, yy, zz, yz, xz, xy)`` and dofs are ``(ux, uy, uz)``
    per node.
    """
    shape = N.shape[:-1]
    n = N.shape[-1]
    B0 = np.zeros(shape + (6, 3 * n))
    B1 = np.zeros(shape + (6, 3 * n))
    Nm = np.zeros(shape + (3, 3 * n))
    ux, uy, uz = slice(0, None, 3), slice(1, None, 3), slice(2, None, 3)
    B0[..., 1, uy] = dNy
    B0[..., 2, uz] = dNz
    B0[..., 3, uy] = dNz
    B0[..., 3, uz] = dNy
    B0[..., 4, ux] = dNz
    B0[..., 5, ux] = dNy
    B1[..., 0, ux] = N
    B1[..., 4, uz] = N
    B1[..., 5, uy] = N
    Nm[..., 0, ux] = N
    Nm[..., 1, uy] = N
    Nm[..., 2, uz] = N
    return B0, B1, Nm


def line_kernels(mesh, elements, order):
    """Kernels for line GLL elements along ``z`` with collocated GLL quadrature."""
    xi, w = gll_points(order)
    Nq, dNq = lagrange_basis(xi, xi)
    Z = np.array([mesh.nodes[list(e.connectivity), 1] for e in elements])  # (E, n)
    jac = Z @ dNq.T  # (E, Q)
    bad = np.flatnonzero((jac <= 0).any(axis=1))
    if bad.size:
        raise AssemblyError(f"element {elements[bad[0]].index_hint} has a non-positive Jacobian")
    dNz = dNq[None, :, :] / jac[:, :, None]
    N = np.broadcast_to(Nq, dNz.shape)
    B0, B1, Nm = _strain_operators(N, np.zeros_like(dNz), dNz)
    return ElementKernels(B0, B1, Nm, w[None, :] * jac)


def quad9_kernels(mesh, elements, quad_order=3):
    Nq, dNq, w = quad9_rule(quad_order)
    X = np.array([mesh.nodes[list(e.connectivity)] for e in elements])  # (E, 9, 2)
    J = np.einsum("qai,eaj->eqij", dNq, X)  # d(y,z)/d(xi,eta) per point
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    bad = np.flatnonzero((det <= 0).any(axis=1))
    if bad.size:
        raise AssemblyError(f"element {elements[bad[0]].index_hint} has a non-positive Jacobian")
    Jinv = np.linalg.inv(J)
    dN = np.einsum("qai,eqji->eqaj", dNq, Jinv)  # derivatives w.r.t. (y, z)
    N = np.broadcast_to(Nq, dN.shape[:-1])
    B0, B1, Nm = _strain_operators(N, dN[..., 0], dN[..., 1])
    return ElementKernels(B0, B1, Nm, w[None, :] * det)


class _Indexed:
    """Element wrapper carrying its position for error messages."""

    __slots__ = ("connectivity", "material", "kind", "index_hint")

    def __init__(self, e, idx):
        self.connectivity, self.material, self.kind = e.connectivity, e.material, e.kind
        self.index_hint = idx


def assemble(mesh, scales=None, quad_order=3):
    """Assemble the dimensionless ``K1, K2, K3, M`` for ``mesh``.

    ``quad_order`` sets the Gauss rule for quad9 elements; line GLL elements
    always use their own collocated GLL rule, which makes ``M`` diagonal.
    """
    scales = scales or Scales()
    if not (scales.a > 0 and scales.c_T > 0):
        raise AssemblyError("scales a and c_T must be positive")
    rho_ref = mesh.materials[0].density
    C_all = np.array([m.stiffness for m in mesh.materials]) / (rho_ref * scales.c_T ** 2)
    rho_all = np.array([m.density for m in mesh.materials]) / rho_ref

    groups = {}
    for idx, e in enumerate(mesh.elements):
        groups.setdefault(e.kind, []).append(_Indexed(e, idx))

    n = mesh.dof_count
    rows, cols, vals = [], [], {name: [] for name in ("K1", "K2", "K3", "M")}
    for kind, elems in sorted(groups.items()):
        if kind == QUAD9:
            ker = quad9_kernels(mesh, elems, quad_order)
        else:
            ker = line_kernels(mesh, elems, int(kind[3:]))
        mats = np.array([e.material for e in elems])
        C = C_all[mats]
        wt = ker.weights
        CB0 = np.einsum("eij,eqjb->eqib", C, ker.B0)
        CB1 = np.einsum("eij,eqjb->eqib", C, ker.B1)
        K1e = np.einsum("eq,eqia,eqib->eab", wt, ker.B0, CB0)
        K3e = np.einsum("eq,eqia,eqib->eab", wt, ker.B1, CB1)
        X = np.einsum("eq,eqia,eqib->eab", wt, ker.B0, CB1)
        K2e = X - np.swapaxes(X, 1, 2)
        Me = np.einsum("eq,eqia,eqib->eab", wt * rho_all[mats][:, None], ker.N, ker.N)

        conn = np.array([e.connectivity for e in elems])
        dofs = (3 * conn[:, :, None] + np.arange(3)).reshape(len(elems), -1)
        r = np.repeat(dofs, dofs.shape[1], axis=1).ravel()
        c = np.tile(dofs, (1, dofs.shape[1])).ravel()
        rows.append(r)
        cols.append(c)
        for name, Ae in (("K1", K1e), ("K2", K2e), ("K3", K3e), ("M", Me)):
            vals[name].append(Ae.ravel())

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    out = {}
    for name, v in vals.items():
        A = sp.coo_matrix((np.concatenate(v), (rows, cols)), shape=(n, n)).tocsr()
        A.sum_duplicates()
        A = (A - A.T) * 0.5 if name == "K2" else (A + A.T) * 0.5
        A = A.tocsr()
        A.eliminate_zeros()
        A.sort_indices()
        out[name] = A
    return SafeMatrices(out["K1"], out["K2"], out["K3"], out["M"], scales, mesh)


def stiffness_at(m, k):
    """Dense Hermitian ``K(k) = K1 + i k K2 + k^2 K3``."""
    K1, K2, K3 = m.dense
    k = float(k)
    return (K1 + (k * k) * K3) + 1j * (k * K2)


def stiffness_derivative_at(m, k):
    """Dense Hermitian ``K'(k) = i K2 + 2 k K3``."""
    _, K2, K3 = m.dense
    return (2.0 * float(k)) * K3 + 1j * K2
