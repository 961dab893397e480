"""First-order eigenvector perturbation, the two-state veering model and
the local step bound that guarantees correct tracking.

With M-orthonormal modes and ``P = Q^H K'(k) Q``, the derivative of mode ``i``
expanded in the retained modes is

    q_i' = sum_{j != i} P[j, i] / (lam_i - lam_j) q_j,

which has no component along ``q_i`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .assembly import stiffness_at, stiffness_derivative_at
from .eigensolve import EPS_EIG, gap_floor, relative_gap, solve_modes
from .errors import ContractViolation, DegenerateModeError


@dataclass(frozen=True)
class CouplingCoefficient:
    i: int
    j: int
    value: complex


@dataclass(frozen=True)
class StepBoundEstimate:
    k: float
    i: int
    C1: float
    C2: float
    delta0: float
    delta_k_max: float


Scalar = Union[float, complex, Callable]


@dataclass(frozen=True)
class TwoStateModel:
    """Effective Hermitian 2x2 model ``[[a, b], [conj(b), c]]`` around ``k0``.

    Each entry is either a constant or a function of ``k``.
    """

    a: Scalar
    b: Scalar
    c: Scalar
    modes: tuple = (0, 1)
    k0: float = 0.0

    @staticmethod
    def _at(f, k):
        return f(k) if callable(f) else f

    def matrix(self, k):
        a, b, c = (self._at(f, k) for f in (self.a, self.b, self.c))
        a, c = np.real_if_close(a), np.real_if_close(c)
        if np.iscomplexobj(a) or np.iscomplexobj(c):
            raise ContractViolation("diagonal entries of a two-state model must be real")
        return np.array([[a, b], [np.conj(b), c]], dtype=complex)

    @classmethod
    def from_modes(cls, m, modes, i, j):
        """Freeze modes ``i`` and ``j`` at ``modes.k`` and contract ``K(k)`` against them."""
        Q = modes.vectors[:, [i, j]]

        def entry(r, s):
            return lambda k: complex(Q[:, r].conj() @ (stiffness_at(m, k) @ Q[:, s]))

        return cls(a=lambda k: entry(0, 0)(k).real, b=entry(0, 1),
                   c=lambda k: entry(1, 1)(k).real, modes=(i, j), k0=float(modes.k))


def two_state_eigenvalues(model, k):
    """Closed-form eigenvalues ``(lam_minus, lam_plus)`` of the two-state model."""
    H = model.matrix(k)
    a, c, b = H[0, 0].real, H[1, 1].real, H[0, 1]
    mean = 0.5 * (a + c)
    half = 0.5 * np.sqrt((a - c) ** 2 + 4.0 * abs(b) ** 2)
    return mean - half, mean + half


def projected_derivative(modes, kprime):
    """``P = Q^H K' Q``, so ``P[j, i] = q_j^H K' q_i``."""
    Q = modes.vectors
    return Q.conj().T @ (kprime @ Q)


def coupling(modes, i, j, kprime):
    """``q_j^H K' q_i``."""
    if i == j:
        raise ContractViolation("coupling needs two distinct modes")
    q_i, q_j = modes.vectors[:, i], modes.vectors[:, j]
    return complex(np.vdot(q_j, kprime @ q_i))


def _require_simple(modes, i, eps_eig):
    lam = np.asarray(modes.eigenvalues)
    floor = gap_floor(lam)
    for j in range(len(lam)):
        if j != i and relative_gap(lam[i], lam[j], floor) < eps_eig:
            raise DegenerateModeError(
                f"mode {i} is degenerate with mode {j} at k={modes.k!r}")
    return lam


def _expansion(modes, i, kprime, eps_eig):
    lam = _require_simple(modes, i, eps_eig)
    P = projected_derivative(modes, kprime)
    coef = np.zeros(len(lam), dtype=complex)
    others = np.arange(len(lam)) != i
    coef[others] = P[others, i] / (lam[i] - lam[others])
    return coef, P, lam


def eigvec_derivative(modes, i, kprime, eps_eig=EPS_EIG):
    """``dq_i/dk`` from the modal expansion over the retained modes."""
    coef, _, _ = _expansion(modes, i, kprime, eps_eig)
    return modes.vectors @ coef


def derivative_norm(modes, i, kprime, eps_eig=EPS_EIG):
    """M-norm of :func:`eigvec_derivative`, computed from the coefficients."""
    coef, _, _ = _expansion(modes, i, kprime, eps_eig)
    return float(np.sqrt(np.sum(np.abs(coef) ** 2)))


def coupling_coefficients(modes, i, kprime, eps_eig=EPS_EIG):
    """``c_ij = q_i^H K' q_j / (lam_j - lam_i)`` for every retained ``j != i``."""
    _, P, lam = _expansion(modes, i, kprime, eps_eig)
    return [CouplingCoefficient(i, j, complex(P[i, j] / (lam[j] - lam[i])))
            for j in range(len(lam)) if j != i]


def estimate_step_bound(modes, i, kprime, delta0=0.1, eps_eig=EPS_EIG):
    """Largest step for which the local tracking argument holds around ``modes.k``.

    ``C1 = 2 ||q_i'||^2``, ``C2 = 2 max_j |c_ij|^2`` and
    ``delta_k_max = min(delta0, 1 / sqrt(C1 + C2))``.
    """
    if not delta0 > 0:
        raise ContractViolation("delta0 must be positive")
    C1 = 2.0 * derivative_norm(modes, i, kprime, eps_eig) ** 2
    cs = coupling_coefficients(modes, i, kprime, eps_eig)
    C2 = 2.0 * max((abs(c.value) ** 2 for c in cs), default=0.0)
    total = C1 + C2
    dk = delta0 if total == 0 else min(delta0, 1.0 / np.sqrt(total))
    return StepBoundEstimate(float(modes.k), i, C1, C2, float(delta0), float(dk))


# ---------------------------------------------------------------------------
# finite-difference and Taylor checks


def m_norm(M, v):
    return float(np.sqrt(abs(np.vdot(v, M @ v))))


def _aligned(ref, q, M):
    """``q`` times the unit scalar that makes ``ref^H M q`` real and positive."""
    s = np.vdot(ref, M @ q)
    return q * (np.conj(s) / abs(s))


def finite_difference_derivative(m, k, i, h=1e-5, window=None, modes=None):
    """Central-difference ``dq_i/dk`` with the discrete zero-self-projection phase.

    ``q_i(k +- h)`` are rotated so that ``q_i(k)^H M q_i(k +- h)`` is real
    positive, differenced, and the remaining component along ``q_i(k)`` is
    removed.
    """
    modes = modes or solve_modes(m, k, window, detect_clusters=False)
    plus = solve_modes(m, k + h, window, detect_clusters=False)
    minus = solve_modes(m, k - h, window, detect_clusters=False)
    q = modes.vectors[:, i]
    qp = _aligned(q, plus.vectors[:, i], m.M)
    qm = _aligned(q, minus.vectors[:, i], m.M)
    d = (qp - qm) / (2.0 * h)
    return d - q * np.vdot(q, m.M @ d)


def derivative_error(m, k, i, h=1e-5, window=None, eps_eig=EPS_EIG, floor=1e-6):
    """Relative M-norm gap between the modal-expansion and finite-difference derivatives.

    Modes whose shape does not depend on ``k`` (an isotropic SH mode, say)
    have ``||q_i'||_M < floor``; for them the absolute error is returned.
    """
    modes = solve_modes(m, k, window, detect_clusters=False)
    exact = eigvec_derivative(modes, i, stiffness_derivative_at(m, k), eps_eig)
    fd = finite_difference_derivative(m, k, i, h, window, modes)
    return _relative(m_norm(m.M, exact - fd), m_norm(m.M, exact), floor)


def _relative(err, scale, floor):
    return err / scale if scale >= floor else err


def taylor_fit(m, k, i, j=None, steps=None, window=None):
    """Fit ``1 - MAC_ii`` and ``MAC_ij`` between ``k`` and ``k + dk`` to ``dk^2``.

    Returns ``(self_coefficient, cross_coefficient, j)``; they estimate
    ``||q_i'||^2`` and ``|c_ij|^2``. ``j`` defaults to the mode with the
    largest coupling coefficient. A cubic column absorbs the next Taylor term.
    """
    steps = np.geomspace(1e-4, 1e-3, 8) if steps is None else np.asarray(steps, dtype=float)
    base = solve_modes(m, k, window, detect_clusters=False)
    if j is None:
        cs = coupling_coefficients(base, i, stiffness_derivative_at(m, k))
        j = max(cs, key=lambda c: abs(c.value)).j if cs else None
    q_i = base.vectors[:, i]
    self_loss, cross = [], []
    for dk in steps:
        nxt = solve_modes(m, k + dk, window, detect_clusters=False)
        Mq = m.M @ nxt.vectors
        self_loss.append(1.0 - abs(np.vdot(q_i, Mq[:, i])) ** 2)
        cross.append(abs(np.vdot(q_i, Mq[:, j])) ** 2 if j is not None else 0.0)
    X = np.column_stack([steps ** 2, steps ** 3])
    a_self = np.linalg.lstsq(X, np.array(self_loss), rcond=None)[0][0]
    a_cross = np.linalg.lstsq(X, np.array(cross), rcond=None)[0][0]
    return float(a_self), float(a_cross), j


def eigenvalue_slope_error(m, k, i, h=1e-5, window=None):
    """Relative gap between ``q_i^H K' q_i`` and a central difference of ``lam_i``."""
    modes = solve_modes(m, k, window, detect_clusters=False)
    q = modes.vectors[:, i]
    slope = float(np.real(np.vdot(q, stiffness_derivative_at(m, k) @ q)))
    lp = solve_modes(m, k + h, window, detect_clusters=False).eigenvalues[i]
    lm = solve_modes(m, k - h, window, detect_clusters=False).eigenvalues[i]
    fd = (lp - lm) / (2.0 * h)
    return abs(slope - fd) / max(abs(slope), abs(fd), 1e-12)


# ---------------------------------------------------------------------------
# batched checks at one wavenumber


@dataclass(frozen=True)
class VerifyRow:
    k: float
    i: int
    skipped: str = ""
    derivative_error: float = float("nan")
    qprime_sq: float = float("nan")
    taylor_self_error: float = float("nan")
    j: int = -1
    c_sq: float = float("nan")
    taylor_cross_error: float = float("nan")
    slope_error: float = float("nan")

    def passed(self, tol_derivative=1e-5, tol_taylor=0.05, tol_slope=1e-6):
        if self.skipped:
            return True
        checks = ((self.derivative_error, tol_derivative), (self.taylor_self_error, tol_taylor),
                  (self.taylor_cross_error, tol_taylor), (self.slope_error, tol_slope))
        return all(np.isnan(v) or v <= tol for v, tol in checks)


def fd_noise(eigenvalues, i, h):
    """Rounding bound on a central-difference eigenvector derivative.

    A backward-stable eigensolver mixes mode ``i`` with its nearest
    neighbour by about ``u max|lam| / gap``; differencing over ``2 h``
    turns that into ``u max|lam| / (gap h)``.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    gaps = np.abs(lam - lam[i])
    gaps[i] = np.inf
    return float(np.finfo(float).eps * np.abs(lam).max() / (gaps.min() * h))


def verify_point(m, k, indices, h=1e-5, steps=None, floor=1e-6, taylor_min=1e-8,
                 noise_max=1e-4, eps_eig=EPS_EIG):
    """Run every perturbation check for the modes ``indices`` at ``k``.

    Solves are shared between modes: the full spectrum at ``k``, ``k +- h``
    and ``k + dk`` for each Taylor step. Taylor recoveries are reported only
    where the target ``||q'||^2`` or ``|c_ij|^2`` exceeds ``taylor_min``;
    smaller targets are not resolved by a fit over ``dk <= 1e-3``.

    Degenerate modes are skipped, and so are modes whose
    :func:`fd_noise` bound, relative to ``||q_i'||``, exceeds ``noise_max``:
    there the central difference cannot be trusted as a reference.
    """
    steps = np.geomspace(1e-4, 1e-3, 8) if steps is None else np.asarray(steps, dtype=float)
    base = solve_modes(m, k, detect_clusters=False)
    plus = solve_modes(m, k + h, detect_clusters=False)
    minus = solve_modes(m, k - h, detect_clusters=False)
    ahead = [solve_modes(m, k + dk, detect_clusters=False) for dk in steps]
    Kp = stiffness_derivative_at(m, k)
    M = m.M
    X = np.column_stack([steps ** 2, steps ** 3])
    rows = []
    for i in indices:
        try:
            coef, P, lam = _expansion(base, i, Kp, eps_eig)
        except DegenerateModeError:
            rows.append(VerifyRow(float(k), int(i), skipped="degenerate"))
            continue
        q = base.vectors[:, i]
        exact = base.vectors @ coef
        if _relative(fd_noise(lam, i, h), m_norm(M, exact), floor) > noise_max:
            rows.append(VerifyRow(float(k), int(i), skipped="near-degenerate, FD unresolved"))
            continue
        d = (_aligned(q, plus.vectors[:, i], M) - _aligned(q, minus.vectors[:, i], M)) / (2 * h)
        d = d - q * np.vdot(q, M @ d)
        d_err = _relative(m_norm(M, exact - d), m_norm(M, exact), floor)

        qp_sq = float(np.sum(np.abs(coef) ** 2))
        j = int(np.argmax(np.abs(coef)))
        c_sq = float(abs(coef[j]) ** 2)
        self_loss = [1.0 - abs(np.vdot(q, M @ s.vectors[:, i])) ** 2 for s in ahead]
        cross = [abs(np.vdot(q, M @ s.vectors[:, j])) ** 2 for s in ahead]
        a_self = np.linalg.lstsq(X, np.array(self_loss), rcond=None)[0][0]
        a_cross = np.linalg.lstsq(X, np.array(cross), rcond=None)[0][0]
        self_err = abs(a_self - qp_sq) / qp_sq if qp_sq > taylor_min else float("nan")
        cross_err = abs(a_cross - c_sq) / c_sq if c_sq > taylor_min else float("nan")

        slope = float(P[i, i].real)
        fd = (plus.eigenvalues[i] - minus.eigenvalues[i]) / (2 * h)
        s_err = abs(slope - fd) / max(abs(slope), abs(fd), floor)
        rows.append(VerifyRow(float(k), int(i), "", float(d_err), qp_sq, float(self_err), j,
                              c_sq, float(cross_err), float(s_err)))
    return rows
