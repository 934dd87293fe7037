"""Simplicial meshes of the unit square/cube with face adjacency and the
geometric quantities needed by the DG forms."""
from __future__ import annotations

import itertools
from math import factorial
from typing import NamedTuple

import numpy as np


class Element(NamedTuple):
    vertices: tuple
    barycenter: np.ndarray
    diameter: float
    volume: float


class Face(NamedTuple):
    vertices: tuple
    normal: np.ndarray
    diameter: float
    area: float
    boundary: bool


def _simplex_measure(coords: np.ndarray) -> np.ndarray:
    """Measure of k-simplices embedded in R^d; coords has shape (n, k+1, d)."""
    edges = coords[:, 1:, :] - coords[:, :1, :]
    k = edges.shape[1]
    gram = np.einsum("nid,njd->nij", edges, edges)
    return np.sqrt(np.abs(np.linalg.det(gram))) / factorial(k)


def _diameters(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    return np.sqrt((diff**2).sum(-1)).max(axis=(1, 2))


class Mesh:
    """Conforming simplicial mesh.

    Faces are numbered in lexicographic order of their sorted vertex ids.
    ``face_elements[f] = (K+, K-)`` with ``K+ < K-``; boundary faces carry
    ``K- = -1``.  ``normals[f]`` points from K+ to K- (outward on the
    boundary).
    """

    def __init__(self, vertices, elements):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        self.dim = self.vertices.shape[1]
        if self.dim not in (2, 3):
            raise ValueError(f"only 2D/3D meshes are supported, got dim={self.dim}")
        if self.elements.shape[1] != self.dim + 1:
            raise ValueError("elements must be simplices with dim+1 vertices")

        d = self.dim
        ne = len(self.elements)
        coords = self.vertices[self.elements]
        self.volumes = _simplex_measure(coords)
        if np.any(self.volumes <= 0):
            raise ValueError("mesh contains degenerate elements")
        self.barycenters = coords.mean(axis=1)
        self.diameters = _diameters(coords)

        # local face i is opposite local vertex i
        local = np.array([[j for j in range(d + 1) if j != i] for i in range(d + 1)])
        all_faces = np.sort(self.elements[:, local], axis=2).reshape(-1, d)
        faces, inverse = np.unique(all_faces, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        self.faces = faces
        self.element_faces = inverse.reshape(ne, d + 1)

        nf = len(faces)
        face_elements = np.full((nf, 2), -1, dtype=np.int64)
        owner = np.repeat(np.arange(ne), d + 1)
        count = np.zeros(nf, dtype=np.int64)
        for f, k in zip(inverse, owner):
            if count[f] >= 2:
                raise ValueError(f"face {faces[f]} shared by more than two elements")
            face_elements[f, count[f]] = k
            count[f] += 1
        self.face_elements = face_elements
        self.boundary = face_elements[:, 1] < 0

        fcoords = self.vertices[faces]
        self.face_areas = _simplex_measure(fcoords)
        self.face_diameters = _diameters(fcoords)
        self.face_centroids = fcoords.mean(axis=1)
        if d == 2:
            t = fcoords[:, 1] - fcoords[:, 0]
            normals = np.stack([t[:, 1], -t[:, 0]], axis=1)
        else:
            normals = np.cross(fcoords[:, 1] - fcoords[:, 0], fcoords[:, 2] - fcoords[:, 0])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        outward = self.face_centroids - self.barycenters[face_elements[:, 0]]
        flip = np.einsum("fd,fd->f", normals, outward) < 0
        normals[flip] *= -1
        self.normals = normals

        # diameter of the inscribed ball: 2 * d * |K| / |dK|
        surface = self.face_areas[self.element_faces].sum(axis=1)
        self.inradius_diameters = 2.0 * d * self.volumes / surface

        for arr in (self.vertices, self.elements, self.faces, self.element_faces,
                    self.face_elements, self.normals, self.volumes, self.barycenters):
            arr.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def quasi_uniformity(self) -> float:
        """``max h_K / min rho_K``."""
        return float(self.h / self.inradius_diameters.min())

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    def element(self, k: int) -> Element:
        return Element(tuple(int(v) for v in self.elements[k]), self.barycenters[k],
                       float(self.diameters[k]), float(self.volumes[k]))

    def face(self, f: int) -> Face:
        return Face(tuple(int(v) for v in self.faces[f]), self.normals[f],
                    float(self.face_diameters[f]), float(self.face_areas[f]),
                    bool(self.boundary[f]))

    def neighbors(self, k: int) -> list[int]:
        """Face neighbours of element ``k`` in increasing id order."""
        out = []
        for f in self.element_faces[k]:
            a, b = self.face_elements[f]
            other = b if a == k else a
            if other >= 0:
                out.append(int(other))
        return sorted(out)

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_elements)]
        for a, b in self.face_elements[~self.boundary]:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return [sorted(x) for x in adj]


def face_orientation(mesh: Mesh, face_id: int):
    """Return ``(K+, K- or None, unit normal)`` for a face."""
    a, b = mesh.face_elements[face_id]
    return int(a), (None if b < 0 else int(b)), mesh.normals[face_id].copy()


def build_structured_mesh(dim: int, n: int) -> Mesh:
    """Uniform simplicial mesh of (0,1)^dim with n cells per axis.

    2D squares are cut along the (0,0)-(1,1) diagonal; 3D cubes are split into
    six Kuhn tetrahedra sharing the main diagonal, so faces match across cells.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    ticks = np.linspace(0.0, 1.0, n + 1)

    if dim == 2:
        X, Y = np.meshgrid(ticks, ticks, indexing="ij")
        vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

        def vid(i, j):
            return i * (n + 1) + j

        elements = []
        for i in range(n):
            for j in range(n):
                v00, v10 = vid(i, j), vid(i + 1, j)
                v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
                elements.append((v00, v10, v11))
                elements.append((v00, v11, v01))
        return Mesh(vertices, np.array(elements))

    X, Y, Z = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid3(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    perms = list(itertools.permutations(range(3)))
    elements = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for perm in perms:
                    corner = [i, j, k]
                    tet = [vid3(*corner)]
                    for axis in perm:
                        corner[axis] += 1
                        tet.append(vid3(*corner))
                    elements.append(tet)
    return Mesh(vertices, np.array(elements))


def read_ascii_mesh(path) -> Mesh:
    """Read ``dim nv ne`` header, nv coordinate lines, ne 0-based vertex-id lines."""
    with open(path) as fh:
        tokens = [line.split() for line in fh if line.strip()]
    dim, nv, ne = (int(x) for x in tokens[0])
    if len(tokens) < 1 + nv + ne:
        raise ValueError(f"{path}: expected {nv} vertices and {ne} elements")
    vertices = np.array([[float(x) for x in row[:dim]] for row in tokens[1:1 + nv]])
    elements = np.array([[int(x) for x in row[:dim + 1]] for row in tokens[1 + nv:1 + nv + ne]])
    return Mesh(vertices, elements)


def write_ascii_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {len(mesh.vertices)} {mesh.n_elements}\n")
        for v in mesh.vertices:
            fh.write(" ".join(repr(float(x)) for x in v) + "\n")
        for e in mesh.elements:
            fh.write(" ".join(str(int(x)) for x in e) + "\n")
