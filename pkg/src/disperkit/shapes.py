"""Reference-element shape functions and quadrature rules."""

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=None)
def gll_points(order):
    """Gauss-Lobatto-Legendre nodes and weights on [-1, 1] for polynomial ``order``.

    Returns ``order + 1`` points including both end points. The rule
    integrates polynomials up to degree ``2 * order - 1`` exactly.
    """
    if order < 1:
        raise ValueError(f"GLL order must be >= 1, got {order}")
    cP = np.zeros(order + 1)
    cP[-1] = 1.0
    interior = np.sort(L.legroots(L.legder(cP))) if order > 1 else np.empty(0)
    x = np.concatenate(([-1.0], interior, [1.0]))
    w = 2.0 / (order * (order + 1) * L.legval(x, cP) ** 2)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_points(n):
    x, w = L.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def lagrange_basis(nodes, x):
    """Lagrange polynomials on ``nodes`` and their derivatives at points ``x``.

    Returns ``(N, dN)`` with shape ``(len(x), len(nodes))``.
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = len(nodes)
    N = np.ones((len(x), m))
    dN = np.zeros((len(x), m))
    for j in range(m):
        others = [nodes[i] for i in range(m) if i != j]
        denom = np.prod([nodes[j] - o for o in others])
        N[:, j] = np.prod([x - o for o in others], axis=0) / denom if others else 1.0
        for skip in range(len(others)):
            term = np.ones_like(x)
            for i, o in enumerate(others):
                if i != skip:
                    term = term * (x - o)
            dN[:, j] += term
        dN[:, j] /= denom
    return N, dN


# (xi, eta) grid position of each quad9 node: 4 corners counter-clockwise,
# then the mid-side nodes of edges 0-1, 1-2, 2-3, 3-0, then the centre.
QUAD9_GRID = ((0, 0), (2, 0), (2, 2), (0, 2), (1, 0), (2, 1), (1, 2), (0, 1), (1, 1))
QUAD9_REF = np.array([[(-1.0, 0.0, 1.0)[a], (-1.0, 0.0, 1.0)[b]] for a, b in QUAD9_GRID])


def _quad1d(t):
    t = np.asarray(t, dtype=float)
    N = np.stack([0.5 * t * (t - 1), 1 - t * t, 0.5 * t * (t + 1)], axis=-1)
    dN = np.stack([t - 0.5, -2 * t, t + 0.5], axis=-1)
    return N, dN


def quad9_shape(xi, eta):
    """Biquadratic shape functions at arrays ``xi``, ``eta``.

    Returns ``N`` of shape ``(..., 9)`` and ``dN`` of shape ``(..., 9, 2)``
    holding derivatives with respect to ``(xi, eta)``.
    """
    Nx, dNx = _quad1d(xi)
    Ny, dNy = _quad1d(eta)
    a = [g[0] for g in QUAD9_GRID]
    b = [g[1] for g in QUAD9_GRID]
    N = Nx[..., a] * Ny[..., b]
    dN = np.stack([dNx[..., a] * Ny[..., b], Nx[..., a] * dNy[..., b]], axis=-1)
    return N, dN


@lru_cache(maxsize=None)
def quad9_rule(n):
    """Tensor ``n x n`` Gauss rule with shape data: ``(N, dN, w)``."""
    x, w = gauss_points(n)
    XI, ETA = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w).ravel()
    N, dN = quad9_shape(XI.ravel(), ETA.ravel())
    for arr in (N, dN, W):
        arr.setflags(write=False)
    return N, dN, W
