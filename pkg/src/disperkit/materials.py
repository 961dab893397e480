"""Elastic constitutive matrices and laminate layups.

Stiffness matrices use Voigt order ``(11, 22, 33, 23, 13, 12)`` with
engineering shear strains, i.e. ``sigma = C @ [e11, e22, e33, g23, g13, g12]``.
Axis 3 is the plate normal for laminates; ply angles rotate about it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMaterialError

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class Material:
    """Linear elastic solid: 6x6 Voigt stiffness [Pa] and density [kg/m^3]."""

    stiffness: np.ndarray
    density: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        C = np.array(self.stiffness, dtype=float)
        if C.shape != (6, 6):
            raise InvalidMaterialError(f"stiffness must be 6x6, got {C.shape}")
        scale = np.abs(C).max()
        if scale == 0 or np.abs(C - C.T).max() > _SYM_TOL * scale:
            raise InvalidMaterialError("stiffness must be symmetric and nonzero")
        C = 0.5 * (C + C.T)
        if np.linalg.eigvalsh(C).min() <= 0:
            raise InvalidMaterialError("stiffness must be positive definite")
        if not self.density > 0:
            raise InvalidMaterialError(f"density must be positive, got {self.density}")
        C.setflags(write=False)
        object.__setattr__(self, "stiffness", C)
        object.__setattr__(self, "density", float(self.density))

    def rotated(self, theta):
        """Copy of this material with fibres rotated by ``theta`` degrees about axis 3."""
        return Material(rotate_stiffness(self.stiffness, theta), self.density,
                        name=f"{self.name}@{theta:g}")


def isotropic_stiffness(E, nu):
    """Voigt stiffness of an isotropic solid from Young's modulus and Poisson ratio."""
    if not E > 0:
        raise InvalidMaterialError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise InvalidMaterialError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    C = np.zeros((6, 6))
    C[:3, :3] = lam
    C[np.arange(3), np.arange(3)] = lam + 2 * mu
    C[np.arange(3, 6), np.arange(3, 6)] = mu
    return C


def isotropic_material(E, nu, rho, name=""):
    return Material(isotropic_stiffness(E, nu), rho, name=name)


def transversely_isotropic_stiffness(E1, E2, G12, nu12, nu23, rho, name=""):
    """Fibre-reinforced ply with fibre axis 1 and isotropy plane 2-3.

    The out-of-plane shear modulus is not an input: ``G23 = E2 / (2 (1 + nu23))``.
    Returns a :class:`Material`.
    """
    for label, value in (("E1", E1), ("E2", E2), ("G12", G12), ("rho", rho)):
        if not value > 0:
            raise InvalidMaterialError(f"{label} must be positive, got {value}")
    G23 = E2 / (2 * (1 + nu23))
    if not G23 > 0:
        raise InvalidMaterialError(f"nu23={nu23} gives a non-positive G23")
    S = np.zeros((6, 6))
    S[0, 0] = 1 / E1
    S[1, 1] = S[2, 2] = 1 / E2
    S[0, 1] = S[1, 0] = S[0, 2] = S[2, 0] = -nu12 / E1
    S[1, 2] = S[2, 1] = -nu23 / E2
    S[3, 3] = 1 / G23
    S[4, 4] = S[5, 5] = 1 / G12
    if np.linalg.cond(S) > 1e12 or np.linalg.eigvalsh(S).min() <= 0:
        raise InvalidMaterialError("compliance is singular or indefinite")
    C = np.linalg.inv(S)
    return Material(0.5 * (C + C.T), rho, name=name)


def bond_matrix(R):
    """6x6 Voigt stress transformation for the 3x3 rotation ``R`` (new = R @ old)."""
    R = np.asarray(R, dtype=float)
    pairs = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
    T = np.empty((6, 6))
    for I, (i, j) in enumerate(pairs):
        for J, (k, l) in enumerate(pairs):
            if J < 3:
                T[I, J] = R[i, k] * R[j, l]
            else:
                T[I, J] = R[i, k] * R[j, l] + R[i, l] * R[j, k]
    return T


def rotate_stiffness(C, theta):
    """Rotate a Voigt stiffness by ``theta`` degrees about the 3-axis.

    A ply at angle ``theta`` has its 1-axis along ``(cos theta, sin theta, 0)``.
    """
    t = np.deg2rad(theta)
    c, s = np.cos(t), np.sin(t)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    T = bond_matrix(R)
    out = T @ np.asarray(C, dtype=float) @ T.T
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class Ply:
    angle: float
    thickness: float
    material: Material


@dataclass(frozen=True)
class Layup:
    """Plies ordered from the bottom face (most negative z) to the top face."""

    plies: tuple

    def __post_init__(self):
        plies = tuple(self.plies)
        if not plies:
            raise InvalidMaterialError("a layup needs at least one ply")
        for p in plies:
            if not p.thickness > 0:
                raise InvalidMaterialError(f"ply thickness must be positive, got {p.thickness}")
        object.__setattr__(self, "plies", plies)

    @property
    def thickness(self):
        return sum(p.thickness for p in self.plies)

    def __len__(self):
        return len(self.plies)

    @classmethod
    def from_angles(cls, angles, thickness, material):
        return cls(tuple(Ply(float(a), float(thickness), material) for a in angles))


_STACK_RE = re.compile(r"^\s*\[([^\]]*)\]\s*(?:_?\s*(\d*)\s*(s?))\s*$", re.IGNORECASE)


def parse_stacking(text):
    """Expand laminate shorthand into a list of ply angles.

    ``"[0,90,45,-45]_2s"`` repeats the bracket twice and mirrors the result;
    ``"[0/90]_4"`` repeats four times. Separators may be ``,`` or ``/``.
    """
    m = _STACK_RE.match(text)
    if m is None:
        raise InvalidMaterialError(f"cannot parse stacking sequence {text!r}")
    body, count, sym = m.groups()
    items = [s for s in re.split(r"[,/\s]+", body.strip()) if s]
    if not items:
        raise InvalidMaterialError(f"empty stacking sequence {text!r}")
    try:
        angles = [float(s) for s in items]
    except ValueError as exc:
        raise InvalidMaterialError(f"bad ply angle in {text!r}") from exc
    angles = angles * (int(count) if count else 1)
    if sym:
        angles = angles + angles[::-1]
    return angles
