import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from disperkit.errors import MeshError, MeshParseError
from disperkit.materials import Layup, isotropic_material, parse_stacking
from disperkit.mesh import (QUAD9, CrossSectionMesh, Element, build_annulus_mesh,
                            build_lshape_mesh, build_plate_mesh, load_mesh,
                            rotation_permutation, save_mesh)

ALU = isotropic_material(70e9, 0.33, 2700.0, name="al")


def test_plate_mesh_nodes_and_span():
    lay = Layup.from_angles(parse_stacking("[0,90,45,-45]_2s"), 0.25e-3, ALU)
    mesh = build_plate_mesh(lay, order=4, a=2e-3)
    assert mesh.node_count == 16 * 4 + 1
    assert np.isclose(mesh.nodes[0, 1], -1.0) and np.isclose(mesh.nodes[-1, 1], 1.0)
    assert np.isclose(mesh.area(), 2.0)
    # four distinct ply orientations
    assert len(mesh.materials) == 4


def test_plate_order_must_be_at_least_two():
    lay = Layup.from_angles([0], 1e-3, ALU)
    with pytest.raises(MeshError):
        build_plate_mesh(lay, order=1)


@given(st.sampled_from([8, 12, 16, 24]), st.integers(1, 3))
def test_annulus_rotational_symmetry(n_circ, n_rad):
    mesh = build_annulus_mesh(13.0, 15.0, n_circ, n_rad, ALU)
    perm = rotation_permutation(mesh, 2 * np.pi / n_circ)
    assert perm is not None
    assert sorted(perm.tolist()) == list(range(mesh.node_count))
    assert rotation_permutation(mesh, 2 * np.pi / n_circ / 3) is None


def test_annulus_area_converges():
    exact = np.pi * (15.0 ** 2 - 13.0 ** 2)
    errs = [abs(build_annulus_mesh(13.0, 15.0, n, 1, ALU).area() - exact) / exact
            for n in (12, 24)]
    assert errs[1] < errs[0] < 1e-2


def test_annulus_rejects_odd_count():
    with pytest.raises(MeshError):
        build_annulus_mesh(13.0, 15.0, 9, 1, ALU)


def test_lshape_area_and_connectivity():
    mesh = build_lshape_mesh(3.0, 2.0, 0.5, ALU, n_thick=2)
    assert np.isclose(mesh.area(), 3.0 * 0.5 + (2.0 - 0.5) * 0.5)
    used = {i for e in mesh.elements for i in e.connectivity}
    assert used == set(range(mesh.node_count))


def test_duplicate_nodes_rejected():
    nodes = np.zeros((9, 2))
    with pytest.raises(MeshError):
        CrossSectionMesh(nodes, [Element(tuple(range(9)), 0, QUAD9)], [ALU])


def test_mixed_kinds_rejected():
    nodes = np.column_stack([np.arange(9.0), np.arange(9.0) ** 2])
    elements = [Element(tuple(range(9)), 0, QUAD9), Element((0, 1, 2), 0, "gll2")]
    with pytest.raises(MeshError):
        CrossSectionMesh(nodes, elements, [ALU])


@pytest.mark.parametrize("builder", [
    lambda: build_lshape_mesh(3.0, 2.0, 0.5, ALU),
    lambda: build_annulus_mesh(13.0, 15.0, 8, 1, ALU),
    lambda: build_plate_mesh(Layup.from_angles([0, 45], 1e-3, ALU), 3, 1e-3),
])
def test_save_load_roundtrip(tmp_path, builder):
    mesh = builder()
    path = tmp_path / "m.txt"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert back.elements == mesh.elements
    for a, b in zip(back.materials, mesh.materials):
        assert np.allclose(a.stiffness, b.stiffness, rtol=1e-15)
        assert a.density == b.density


def _lines(tmp_path):
    mesh = build_plate_mesh(Layup.from_angles([0], 1e-3, ALU), 2, 1e-3)
    path = tmp_path / "m.txt"
    save_mesh(mesh, path)
    return path, path.read_text().splitlines()


def test_parse_error_reports_line(tmp_path):
    path, lines = _lines(tmp_path)
    lines[2] = "1 0.0 oops"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert info.value.line == 3


def test_dangling_node_index(tmp_path):
    path, lines = _lines(tmp_path)
    lines[4] = "0 gll2 0 1 7 0"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MeshParseError, match="dangling") as info:
        load_mesh(path)
    assert info.value.line == 5


def test_bad_header(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("points 3\n")
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert info.value.line == 1
