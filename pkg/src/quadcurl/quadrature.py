"""Conical-product quadrature rules on the reference interval, triangle and
tetrahedron, plus affine mapping onto mesh elements and faces.

The reference simplex of dimension ``d`` has vertices ``0, e_1, ..., e_d``
and measure ``1/d!``.  Rules are built from collapsed Gauss-Jacobi rules, so
any degree up to :data:`MAX_DEGREE` is available.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 20


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray  # (nq, simplex_dim) reference coordinates
    weights: np.ndarray  # (nq,)
    exact_degree: int

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _gauss_jacobi_01(n: int, alpha: int):
    """Nodes/weights on [0, 1] for the weight (1 - s)**alpha."""
    if alpha == 0:
        x, w = roots_legendre(n)
    else:
        x, w = roots_jacobi(n, alpha, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def get_rule(simplex_dim: int, degree: int) -> QuadRule:
    """Return a rule on the reference ``simplex_dim``-simplex exact for all
    polynomials of total degree ``degree``."""
    if simplex_dim not in (1, 2, 3):
        raise ValueError(f"unsupported simplex dimension {simplex_dim}")
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"quadrature degree out of range: {degree} (1..{MAX_DEGREE})")
    n = degree // 2 + 1

    if simplex_dim == 1:
        s, ws = _gauss_jacobi_01(n, 0)
        pts, wts = s[:, None], ws
    elif simplex_dim == 2:
        s, ws = _gauss_jacobi_01(n, 1)
        t, wt = _gauss_jacobi_01(n, 0)
        S, T = np.meshgrid(s, t, indexing="ij")
        pts = np.stack([S, T * (1 - S)], axis=-1).reshape(-1, 2)
        wts = np.outer(ws, wt).ravel()
    else:
        s, ws = _gauss_jacobi_01(n, 2)
        t, wt = _gauss_jacobi_01(n, 1)
        r, wr = _gauss_jacobi_01(n, 0)
        S, T, R = np.meshgrid(s, t, r, indexing="ij")
        pts = np.stack(
            [S, T * (1 - S), R * (1 - S) * (1 - T)], axis=-1
        ).reshape(-1, 3)
        wts = np.einsum("i,j,k->ijk", ws, wt, wr).ravel()

    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule(pts, wts, 2 * n - 1)


def reference_measure(simplex_dim: int) -> float:
    return 1.0 / factorial(simplex_dim)


def monomial_integral(exponents) -> float:
    """Exact integral of prod x_i**a_i over the reference simplex."""
    exponents = [int(a) for a in exponents]
    num = 1
    for a in exponents:
        num *= factorial(a)
    return num / factorial(sum(exponents) + len(exponents))


@dataclass(frozen=True)
class CellQuadrature:
    """Quadrature points mapped to every element of a mesh."""

    points: np.ndarray  # (ne, nq, d)
    weights: np.ndarray  # (ne, nq), physical


@dataclass(frozen=True)
class FaceQuadrature:
    """Quadrature points mapped to every face of a mesh."""

    points: np.ndarray  # (nf, nq, d)
    weights: np.ndarray  # (nf, nq), physical


def _map_simplices(coords: np.ndarray, measures: np.ndarray, rule: QuadRule):
    # coords: (n, k+1, d) simplex vertices; affine map from the reference simplex
    origin = coords[:, 0, :]
    edges = coords[:, 1:, :] - origin[:, None, :]  # (n, k, d)
    points = origin[:, None, :] + np.einsum("qk,nkd->nqd", rule.points, edges)
    scale = measures / reference_measure(rule.dim)
    weights = scale[:, None] * rule.weights[None, :]
    return points, weights


def cell_quadrature(mesh, degree: int) -> CellQuadrature:
    rule = get_rule(mesh.dim, degree)
    pts, wts = _map_simplices(mesh.vertices[mesh.elements], mesh.volumes, rule)
    return CellQuadrature(pts, wts)


def face_quadrature(mesh, degree: int) -> FaceQuadrature:
    rule = get_rule(mesh.dim - 1, degree)
    pts, wts = _map_simplices(mesh.vertices[mesh.faces], mesh.face_areas, rule)
    return FaceQuadrature(pts, wts)
