"""Small closed-form matrix families for exercising the tracker.

Both families have ``M = I`` and ``K2 = 0``. In the veering family two modes
``A`` and ``B`` with diagonal entries ``alpha + k^2`` and ``gamma + 2 k^2``
are coupled by a constant ``w``; their uncoupled lines cross at
``k* = sqrt(alpha - gamma)`` and the coupled eigenvalues veer with a minimum
gap of ``2 w``. In the crossing family the two modes belong to decoupled
blocks and cross for real.
"""

from __future__ import annotations

import numpy as np

from .assembly import SafeMatrices

EXTRA = (10.0, 14.0, 18.0, 22.0)


def veering_family(w, k_star=1.05, gamma=0.5, extra=EXTRA):
    """Veering pair embedded with uncoupled spectator modes (size ``2 + len(extra)``)."""
    n = 2 + len(extra)
    K1 = np.zeros((n, n))
    K3 = np.eye(n)
    K1[0, 0] = gamma + k_star ** 2
    K1[1, 1] = gamma
    K1[0, 1] = K1[1, 0] = w
    K3[1, 1] = 2.0
    K1[np.arange(2, n), np.arange(2, n)] = extra
    return SafeMatrices.from_arrays(K1, np.zeros((n, n)), K3, np.eye(n))


def veering_block(w, k_star, gamma, k):
    """The 2x2 block ``[[a, w], [w, c]]`` of :func:`veering_family` at ``k``."""
    return np.array([[gamma + k_star ** 2 + k * k, w], [w, gamma + 2.0 * k * k]])


def veering_exact(w, k, k_star=1.05, gamma=0.5):
    """Closed-form eigenvalues and unit eigenvectors of the veering block.

    The lower mode is ``(cos t, sin t)`` with ``tan(2 t) = 2 w / (a - c)`` on
    the branch continuous in ``k``; it starts as the ``B`` dof when ``k << k*``.
    """
    a = gamma + k_star ** 2 + k * k
    c = gamma + 2.0 * k * k
    half = 0.5 * np.hypot(a - c, 2.0 * w)
    lam = np.array([0.5 * (a + c) - half, 0.5 * (a + c) + half])
    t = 0.5 * np.arctan2(-2.0 * w, c - a)  # angle of the lower eigenvector
    lower = np.array([np.cos(t), np.sin(t)])
    upper = np.array([-np.sin(t), np.cos(t)])
    return lam, np.column_stack([lower, upper])


def veering_width(w, k_star=1.05):
    """Wavenumber span over which the veering pair exchanges character (~ w / k*)."""
    return w / k_star


def crossing_family(k_star=1.05, gamma=0.5, inner=0.3, extra=EXTRA):
    """Two decoupled blocks whose lowest modes cross at ``k*``.

    Block A holds dofs ``0, 2, 4`` and block B dofs ``1, 3, 5``; inside each
    block the lowest mode is coupled to the block's spectators with strength
    ``inner`` so eigenvectors are not coordinate axes.
    """
    n = 2 + len(extra)
    K1 = np.zeros((n, n))
    K3 = np.zeros((n, n))
    blocks = (list(range(0, n, 2)), list(range(1, n, 2)))
    diag1 = np.concatenate(([gamma + k_star ** 2, gamma], extra))
    diag3 = np.concatenate(([1.0, 2.0], np.ones(len(extra))))
    K1[np.arange(n), np.arange(n)] = diag1
    K3[np.arange(n), np.arange(n)] = diag3
    for blk in blocks:
        for s in blk[1:]:
            K1[blk[0], s] = K1[s, blk[0]] = inner
    return SafeMatrices.from_arrays(K1, np.zeros((n, n)), K3, np.eye(n))


def two_block_partition(n):
    return list(range(0, n, 2)), list(range(1, n, 2))
