import math

import numpy as np
import pytest

from quadcurl.mesh import Mesh, build_structured_mesh, face_orientation, read_ascii_mesh, write_ascii_mesh


def test_unit_square_single_cell():
    mesh = build_structured_mesh(2, 1)
    assert mesh.n_elements == 2
    assert mesh.n_faces == 5
    assert len(mesh.boundary_faces) == 4 and len(mesh.interior_faces) == 1


def test_unit_cube_single_cell():
    mesh = build_structured_mesh(3, 1)
    assert mesh.n_elements == 6
    assert len(mesh.boundary_faces) == 12


@pytest.mark.parametrize("dim,n,count", [(2, 3, 18), (3, 2, 48)])
def test_element_counts(dim, n, count):
    assert build_structured_mesh(dim, n).n_elements == count


def test_mesh_size_2d():
    assert build_structured_mesh(2, 10).h == pytest.approx(math.sqrt(2) / 10, abs=1e-15)


@pytest.mark.parametrize("dim,n", [(2, 1), (2, 5), (3, 1), (3, 3)])
def test_invariants(dim, n):
    mesh = build_structured_mesh(dim, n)
    assert np.all(mesh.volumes > 0)
    assert abs(mesh.volumes.sum() - 1) <= 1e-12
    assert abs(mesh.face_areas[mesh.boundary].sum() - 2 * dim) <= 1e-12
    np.testing.assert_allclose(np.linalg.norm(mesh.normals, axis=1), 1, atol=1e-14)
    # interior faces: two incident elements, ordered, vertices shared
    for f in mesh.interior_faces:
        a, b = mesh.face_elements[f]
        assert 0 <= a < b
        for v in mesh.faces[f]:
            assert v in mesh.elements[a] and v in mesh.elements[b]
        n = mesh.normals[f]
        assert np.dot(mesh.barycenters[b] - mesh.barycenters[a], n) > 0
    for f in mesh.boundary_faces:
        assert mesh.face_elements[f, 0] >= 0
        # outward: the face centroid lies on the boundary in direction n
        c = mesh.face_centroids[f]
        axis = np.argmax(np.abs(mesh.normals[f]))
        assert abs(abs(mesh.normals[f][axis]) - 1) < 1e-14
        assert c[axis] == (1.0 if mesh.normals[f][axis] > 0 else 0.0)
    # h_e <= max incident h_K
    inc = mesh.diameters[mesh.face_elements[:, 0]]
    assert np.all(mesh.face_diameters <= inc + 1e-15)
    # barycenter = vertex average; diameter = longest edge
    k = mesh.n_elements // 2
    coords = mesh.vertices[mesh.elements[k]]
    np.testing.assert_allclose(mesh.barycenters[k], coords.mean(axis=0))
    edges = [np.linalg.norm(p - q) for p in coords for q in coords]
    assert mesh.diameters[k] == pytest.approx(max(edges))
    assert np.isfinite(mesh.quasi_uniformity) and mesh.quasi_uniformity > 1


@pytest.mark.parametrize("dim", [2, 3])
def test_refinement_halves_h(dim):
    assert build_structured_mesh(dim, 4).h == build_structured_mesh(dim, 2).h / 2


def test_orientation_rules():
    mesh = build_structured_mesh(2, 3)
    f = mesh.interior_faces[5]
    kp, km, n = face_orientation(mesh, f)
    assert kp < km and kp == mesh.face_elements[f, 0]
    # faces on x=0 and y=0 have outward normals (-1, 0) and (0, -1)
    for axis in (0, 1):
        on_plane = [f for f in mesh.boundary_faces
                    if np.allclose(mesh.vertices[mesh.faces[f]][:, axis], 0)]
        assert len(on_plane) == 3
        for f in on_plane:
            kp, km, n = face_orientation(mesh, f)
            assert km is None and f in mesh.element_faces[kp]
            np.testing.assert_allclose(n, -np.eye(2)[axis], atol=1e-15)


def test_diagonal_normal():
    mesh = build_structured_mesh(2, 1)
    f = mesh.interior_faces[0]
    _, _, n = face_orientation(mesh, f)
    a, b = mesh.vertices[mesh.faces[f]]
    assert abs(np.dot(b - a, n)) < 1e-15
    assert np.linalg.norm(n) == pytest.approx(1, abs=1e-15)


def test_neighbors_and_adjacency():
    mesh = build_structured_mesh(2, 4)
    adj = mesh.adjacency()
    for k in range(mesh.n_elements):
        assert adj[k] == mesh.neighbors(k)
        assert 1 <= len(adj[k]) <= 3


def test_ascii_round_trip(tmp_path):
    mesh = build_structured_mesh(3, 2)
    path = tmp_path / "cube.mesh"
    write_ascii_mesh(mesh, path)
    back = read_ascii_mesh(path)
    np.testing.assert_array_equal(back.elements, mesh.elements)
    np.testing.assert_allclose(back.vertices, mesh.vertices, rtol=0, atol=0)


def test_degenerate_element_rejected():
    with pytest.raises(ValueError):
        Mesh(np.array([[0, 0], [1, 0], [2, 0]], float), np.array([[0, 1, 2]]))
