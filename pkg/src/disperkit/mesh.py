"""Waveguide cross-section discretisations.

Coordinates are ``(y, z)`` pairs normalised by the characteristic length.
Plates are meshed with a stack of line GLL elements along ``z`` (``y`` is
zero on every node); bars and pipes use nine-node quadrilaterals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import MeshError, MeshParseError
from .materials import Material
from .shapes import QUAD9_GRID, gll_points, quad9_rule

MERGE_TOL = 1e-12
QUAD9 = "quad9"
_GLL_RE = re.compile(r"^gll(\d+)$")


def gll_kind(order):
    return f"gll{int(order)}"


def kind_node_count(kind):
    if kind == QUAD9:
        return 9
    m = _GLL_RE.match(kind)
    if m is None or int(m.group(1)) < 1:
        raise MeshError(f"unknown element kind {kind!r}")
    return int(m.group(1)) + 1


@dataclass(frozen=True)
class Element:
    connectivity: tuple
    material: int
    kind: str

    @property
    def order(self):
        """Polynomial order of a line GLL element (2 for quad9)."""
        return 2 if self.kind == QUAD9 else kind_node_count(self.kind) - 1


@dataclass(frozen=True)
class CrossSectionMesh:
    nodes: np.ndarray
    elements: tuple
    materials: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "materials", tuple(self.materials))
        self.validate()

    @property
    def node_count(self):
        return len(self.nodes)

    @property
    def dof_count(self):
        return 3 * len(self.nodes)

    @property
    def is_line(self):
        return all(e.kind != QUAD9 for e in self.elements)

    def validate(self):
        n = len(self.nodes)
        if not self.elements:
            raise MeshError("mesh has no elements")
        for idx, e in enumerate(self.elements):
            if len(e.connectivity) != kind_node_count(e.kind):
                raise MeshError(f"element {idx}: {e.kind} needs "
                                f"{kind_node_count(e.kind)} nodes, got {len(e.connectivity)}")
            if min(e.connectivity) < 0 or max(e.connectivity) >= n:
                raise MeshError(f"element {idx}: node index out of range")
            if not 0 <= e.material < len(self.materials):
                raise MeshError(f"element {idx}: material {e.material} not defined")
        kinds = {e.kind == QUAD9 for e in self.elements}
        if len(kinds) > 1:
            raise MeshError("line and quad9 elements cannot be mixed")
        if n > 1:
            pairs = cKDTree(self.nodes).query_pairs(MERGE_TOL)
            if pairs:
                i, j = sorted(pairs)[0]
                raise MeshError(f"duplicate nodes {i} and {j}")

    def area(self):
        """Cross-section area (length for line meshes) by element quadrature."""
        return float(sum(self.element_measures()))

    def element_measures(self):
        out = []
        for e in self.elements:
            X = self.nodes[list(e.connectivity)]
            if e.kind == QUAD9:
                _, dN, w = quad9_rule(3)
                J = np.einsum("qai,aj->qij", dN, X)
                out.append(float(w @ np.linalg.det(J)))
            else:
                out.append(abs(X[-1, 1] - X[0, 1]))
        return out

    def mass_by_material(self):
        """Normalised-area weighted densities, i.e. ``sum(rho_e * A_e)``."""
        return float(sum(self.materials[e.material].density * m
                         for e, m in zip(self.elements, self.element_measures())))


def _material_index(materials, keys, material, angle):
    key = (id(material), float(angle) % 360.0)
    if key not in keys:
        keys[key] = len(materials)
        materials.append(material if angle == 0 else material.rotated(angle))
    return keys[key]


def build_plate_mesh(layup, order=4, a=1.0):
    """One line GLL element per ply, stacked from ``z = -H/2`` to ``z = +H/2``.

    Ply thicknesses are divided by ``a``; neighbouring plies share their
    interface node.
    """
    if order < 2:
        raise MeshError(f"GLL order must be >= 2, got {order}")
    if not a > 0:
        raise MeshError(f"characteristic length must be positive, got {a}")
    xi, _ = gll_points(order)
    H = layup.thickness / a
    z = [-0.5 * H]
    elements, materials, keys = [], [], {}
    for ply in layup.plies:
        z0 = z[-1]
        h = ply.thickness / a
        start = len(z) - 1
        z.extend(z0 + 0.5 * h * (xi[1:] + 1.0))
        mat = _material_index(materials, keys, ply.material, ply.angle)
        elements.append(Element(tuple(range(start, start + order + 1)), mat, gll_kind(order)))
    z[-1] = 0.5 * H
    nodes = np.column_stack([np.zeros(len(z)), z])
    return CrossSectionMesh(nodes, elements, materials,
                            meta={"kind": "plate", "order": order, "thickness": H})


def build_annulus_mesh(r_in, r_out, n_circ, n_rad, material):
    """Quad9 mesh of a ring with exact ``n_circ``-fold rotational symmetry.

    Node angles are ``j * pi / n_circ`` so a rotation by ``2 pi / n_circ``
    maps the node set onto itself; mid-side nodes lie on the true arcs.
    """
    if not 0 < r_in < r_out:
        raise MeshError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if n_circ < 8 or n_circ % 2:
        raise MeshError(f"n_circ must be an even integer >= 8, got {n_circ}")
    if n_rad < 1:
        raise MeshError(f"n_rad must be >= 1, got {n_rad}")
    nt, nr = 2 * n_circ, 2 * n_rad + 1
    theta = np.arange(nt) * (np.pi / n_circ)
    radii = np.linspace(r_in, r_out, nr)
    R, T = np.meshgrid(radii, theta, indexing="ij")
    nodes = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    elements = []
    for er in range(n_rad):
        for et in range(n_circ):
            conn = tuple((2 * er + a) * nt + (2 * et + b) % nt for a, b in QUAD9_GRID)
            elements.append(Element(conn, 0, QUAD9))
    return CrossSectionMesh(nodes, elements, [material],
                            meta={"kind": "annulus", "r_in": r_in, "r_out": r_out,
                                  "n_circ": n_circ, "n_rad": n_rad})


def _breaks(segments):
    """Concatenate ``(length, n_elements)`` segments into quad9 grid coordinates."""
    pts = [0.0]
    for length, n in segments:
        start = pts[-1]
        pts.extend(start + length * np.arange(1, 2 * n + 1) / (2 * n))
    return np.array(pts)


def build_lshape_mesh(leg_y, leg_z, thickness, material, n_thick=2, n_y=None, n_z=None):
    """Structured quad9 mesh of an L-section.

    The section is the union of ``[0, leg_y] x [0, thickness]`` and
    ``[0, thickness] x [0, leg_z]``; the corner block belongs to both legs.
    ``n_thick`` elements span the wall thickness, ``n_y``/``n_z`` the free
    parts of each leg (defaults keep elements roughly square).
    """
    if not 0 < thickness < min(leg_y, leg_z):
        raise MeshError("thickness must be positive and smaller than both legs")
    if n_thick < 1:
        raise MeshError("n_thick must be >= 1")
    h = thickness / n_thick
    n_y = n_y or max(1, int(round((leg_y - thickness) / h)))
    n_z = n_z or max(1, int(round((leg_z - thickness) / h)))
    ys = _breaks([(thickness, n_thick), (leg_y - thickness, n_y)])
    zs = _breaks([(thickness, n_thick), (leg_z - thickness, n_z)])
    cy, cz = n_thick + n_y, n_thick + n_z
    index = {}
    elements = []
    for i in range(cy):
        for j in range(cz):
            if not (j < n_thick or i < n_thick):
                continue
            conn = []
            for a, b in QUAD9_GRID:
                key = (2 * i + a, 2 * j + b)
                if key not in index:
                    index[key] = len(index)
                conn.append(index[key])
            elements.append(Element(tuple(conn), 0, QUAD9))
    nodes = np.empty((len(index), 2))
    for (gi, gj), n in index.items():
        nodes[n] = ys[gi], zs[gj]
    return CrossSectionMesh(nodes, elements, [material],
                            meta={"kind": "lshape", "leg_y": leg_y, "leg_z": leg_z,
                                  "thickness": thickness, "n_thick": n_thick,
                                  "n_y": n_y, "n_z": n_z})


def rotation_permutation(mesh, angle, tol=MERGE_TOL):
    """Node permutation induced by rotating the section by ``angle`` radians.

    Returns ``perm`` with ``rotate(nodes[i]) == nodes[perm[i]]`` within ``tol``,
    or ``None`` if the rotated node set does not coincide with the original.
    """
    c, s = np.cos(angle), np.sin(angle)
    rotated = mesh.nodes @ np.array([[c, s], [-s, c]])
    scale = max(1.0, float(np.abs(mesh.nodes).max()))
    dist, perm = cKDTree(mesh.nodes).query(rotated)
    if np.max(dist) > tol * scale:
        return None
    if len(set(perm.tolist())) != len(perm):
        return None
    return perm


# ---------------------------------------------------------------------------
# text format


def save_mesh(mesh, path):
    path = Path(path)
    lines = [f"nodes {mesh.node_count} elements {len(mesh.elements)}"]
    for i, (y, z) in enumerate(mesh.nodes):
        lines.append(f"{i} {float(y)!r} {float(z)!r}")
    for i, e in enumerate(mesh.elements):
        lines.append(" ".join([str(i), e.kind, *map(str, e.connectivity), str(e.material)]))
    iu = np.triu_indices(6)
    for i, m in enumerate(mesh.materials):
        vals = " ".join(repr(float(v)) for v in m.stiffness[iu])
        lines.append(f"mat {i} {m.density!r} {vals}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _num(tok, lineno, what):
    try:
        return float(tok)
    except ValueError:
        raise MeshParseError(f"expected a number for {what}, got {tok!r}", lineno) from None


def _int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise MeshParseError(f"expected an integer for {what}, got {tok!r}", lineno) from None


def load_mesh(path):
    """Parse the whitespace-delimited mesh format written by :func:`save_mesh`."""
    text = Path(path).read_text(encoding="ascii")
    rows = [(n + 1, ln.split()) for n, ln in enumerate(text.splitlines())]
    rows = [(n, t) for n, t in rows if t and not t[0].startswith("#")]
    if not rows:
        raise MeshParseError("empty mesh file", 1)
    lineno, head = rows[0]
    if len(head) != 4 or head[0] != "nodes" or head[2] != "elements":
        raise MeshParseError("header must read 'nodes N elements E'", lineno)
    n_nodes = _int(head[1], lineno, "node count")
    n_elem = _int(head[3], lineno, "element count")
    body = rows[1:]
    if len(body) < n_nodes + n_elem:
        raise MeshParseError("file ends before all nodes and elements were read",
                             body[-1][0] if body else lineno)

    nodes = np.empty((n_nodes, 2))
    seen = set()
    for lineno, tok in body[:n_nodes]:
        if len(tok) != 3:
            raise MeshParseError("node line must read 'id y z'", lineno)
        nid = _int(tok[0], lineno, "node id")
        if not 0 <= nid < n_nodes or nid in seen:
            raise MeshParseError(f"node id {nid} out of range or repeated", lineno)
        seen.add(nid)
        nodes[nid] = _num(tok[1], lineno, "y"), _num(tok[2], lineno, "z")

    elements = [None] * n_elem
    elem_lines = {}
    for lineno, tok in body[n_nodes:n_nodes + n_elem]:
        if len(tok) < 4:
            raise MeshParseError("element line must read 'id kind n1 ... mat'", lineno)
        eid = _int(tok[0], lineno, "element id")
        if not 0 <= eid < n_elem or elements[eid] is not None:
            raise MeshParseError(f"element id {eid} out of range or repeated", lineno)
        kind = tok[1]
        try:
            count = kind_node_count(kind)
        except MeshError as exc:
            raise MeshParseError(str(exc), lineno) from None
        if len(tok) != count + 3:
            raise MeshParseError(f"{kind} element needs {count} node ids and a material", lineno)
        conn = tuple(_int(t, lineno, "node index") for t in tok[2:2 + count])
        for c in conn:
            if not 0 <= c < n_nodes:
                raise MeshParseError(f"dangling node index {c}", lineno)
        elements[eid] = Element(conn, _int(tok[-1], lineno, "material id"), kind)
        elem_lines[eid] = lineno

    materials = {}
    for lineno, tok in body[n_nodes + n_elem:]:
        if tok[0] != "mat" or len(tok) != 24:
            raise MeshParseError("material line must read 'mat id rho' + 21 stiffness entries",
                                 lineno)
        mid = _int(tok[1], lineno, "material id")
        if mid in materials:
            raise MeshParseError(f"material {mid} defined twice", lineno)
        rho = _num(tok[2], lineno, "density")
        C = np.zeros((6, 6))
        C[np.triu_indices(6)] = [_num(t, lineno, "stiffness") for t in tok[3:]]
        C = C + np.triu(C, 1).T
        try:
            materials[mid] = Material(C, rho)
        except Exception as exc:
            raise MeshParseError(f"invalid material: {exc}", lineno) from None
    if sorted(materials) != list(range(len(materials))):
        raise MeshParseError("material ids must be 0..n-1", rows[-1][0])
    for eid, e in enumerate(elements):
        if e.material not in materials:
            raise MeshParseError(f"undefined material {e.material}", elem_lines[eid])
    try:
        return CrossSectionMesh(nodes, elements, [materials[i] for i in range(len(materials))])
    except MeshError as exc:
        raise MeshParseError(str(exc)) from None
