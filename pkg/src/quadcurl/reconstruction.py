"""Patch reconstruction: element patches, the constrained least-squares fit
on barycenters, and the resulting space with one dof per element and
component."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.optimize

from .fields import PiecewisePolynomialField, ReconstructedBasis
from .polynomials import ScaledPolynomial, monomial_values, n_monomials

# #S per (dim, order) used in the reference experiments
DEFAULT_PATCH_SIZE = {(2, 2): 12, (2, 3): 20, (2, 4): 25, (3, 2): 20, (3, 3): 40}

CONDITION_WARNING = 1e10
_RANK_TOL = 1e-12


class PatchError(ValueError):
    pass


class DegeneratePatchError(PatchError):
    def __init__(self, element, detail=""):
        super().__init__(f"degenerate patch geometry for element {element}{detail}")
        self.element = element


class IllConditionedPatchWarning(RuntimeWarning):
    pass


def default_patch_size(dim: int, order: int) -> int:
    return DEFAULT_PATCH_SIZE.get((dim, order), 2 * n_monomials(dim, order))


@dataclass(frozen=True)
class ElementPatch:
    owner: int
    members: tuple  # owner first, then in order of inclusion
    depth: int

    def __len__(self):
        return len(self.members)

    def collocation_points(self, mesh) -> np.ndarray:
        return mesh.barycenters[list(self.members)]


def build_patches(mesh, target_size: int) -> list[ElementPatch]:
    """Grow S(K) through face neighbours, layer by layer.

    Within a layer candidates are taken closest-barycenter first (ties by
    element id) until the patch holds ``target_size`` elements.
    """
    target_size = int(target_size)
    if target_size < 1:
        raise PatchError("patch size must be positive")
    if target_size > mesh.n_elements:
        raise PatchError(
            f"patch exceeds mesh: {target_size} elements requested, mesh has {mesh.n_elements}"
        )
    adj = mesh.adjacency()
    bary = mesh.barycenters
    patches = []
    for k in range(mesh.n_elements):
        members = [k]
        inside = {k}
        depth = 0
        xk, hk = bary[k], mesh.diameters[k]
        while len(members) < target_size:
            depth += 1
            layer = sorted({c for e in members for c in adj[e] if c not in inside})
            if not layer:
                raise PatchError(f"element {k}: mesh is disconnected, patch cannot grow")
            dist = np.linalg.norm(bary[layer] - xk, axis=1) / hk
            order = sorted(zip(np.round(dist, 10), layer))
            for _, c in order[: target_size - len(members)]:
                members.append(c)
                inside.add(c)
        patches.append(ElementPatch(k, tuple(members), depth))
    return patches


@dataclass(frozen=True)
class LocalReconstruction:
    """Weights of one patch: ``R_K g = sum_j g(x_{members[j]}) * weight_j``."""

    owner: int
    members: tuple
    weights: np.ndarray  # (n_mono, nS) scaled-monomial coefficients per member
    center: np.ndarray
    scale: float
    dim: int
    order: int
    condition: float

    def weight_polynomial(self, j: int) -> ScaledPolynomial:
        return ScaledPolynomial(self.dim, self.order, self.weights[:, j][None, :],
                                self.center, self.scale)

    def polynomial(self, values) -> ScaledPolynomial:
        """Reconstruct from one value (scalar or vector) per member."""
        values = np.asarray(values, dtype=float).reshape(len(self.members), -1)
        return ScaledPolynomial(self.dim, self.order, (self.weights @ values).T,
                                self.center, self.scale)


def _batched_weights(mesh, members: np.ndarray, order: int, owners: np.ndarray):
    nS = members.shape[1]
    nm = n_monomials(mesh.dim, order)
    centers = mesh.barycenters[owners]
    scales = mesh.diameters[owners]
    W = np.zeros((len(owners), nm, nS))
    W[:, 0, 0] = 1.0
    conds = np.ones(len(owners))
    if nm == 1:
        return W, conds
    pts = mesh.barycenters[members]  # (n, nS, d)
    M = monomial_values(pts, centers, scales, mesh.dim, order)[..., 1:]
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    bad = s[:, -1] <= _RANK_TOL * s[:, 0]
    if np.any(bad) or nS < nm:
        k = int(owners[np.flatnonzero(bad)[0]]) if np.any(bad) else int(owners[0])
        raise DegeneratePatchError(k, f" (#S={nS}, dim P_m={nm})")
    conds = s[:, 0] / s[:, -1]
    pinv = np.einsum("nji,nj,nkj->nik", Vt, 1.0 / s, U)  # (n, nm-1, nS)
    W[:, 1:, :] = pinv
    W[:, 1:, 0] -= pinv.sum(axis=2)
    worst = int(np.argmax(conds))
    if conds[worst] > CONDITION_WARNING:
        warnings.warn(
            f"least-squares condition number {conds[worst]:.3e} at element {int(owners[worst])}",
            IllConditionedPatchWarning, stacklevel=3,
        )
    return W, conds


def solve_reconstruction(patch: ElementPatch, order: int, mesh) -> LocalReconstruction:
    """Solve the constrained least-squares problem of one patch.

    The constraint p(x_K) = g(x_K) is eliminated by expanding
    p = g(x_K) + sum_{|a|>=1} c_a phi_a with phi_a(x_K) = 0, and the
    remaining unconstrained problem is solved through an SVD.
    """
    members = np.array(patch.members)[None, :]
    W, conds = _batched_weights(mesh, members, order, np.array([patch.owner]))
    return LocalReconstruction(patch.owner, patch.members, W[0], mesh.barycenters[patch.owner],
                               float(mesh.diameters[patch.owner]), mesh.dim, order, float(conds[0]))


def _lattice(dim: int, level: int) -> np.ndarray:
    """Barycentric lattice of step 1/level on the reference simplex (reference coords)."""
    pts = []
    if dim == 2:
        for i in range(level + 1):
            for j in range(level + 1 - i):
                pts.append((i, j))
    else:
        for i in range(level + 1):
            for j in range(level + 1 - i):
                for k in range(level + 1 - i - j):
                    pts.append((i, j, k))
    return np.array(pts, dtype=float) / level


def _patch_samples(mesh, members, level):
    ref = _lattice(mesh.dim, level)
    coords = mesh.vertices[mesh.elements[list(members)]]
    origin = coords[:, 0, :]
    edges = coords[:, 1:, :] - origin[:, None, :]
    return (origin[:, None, :] + np.einsum("qk,nkd->nqd", ref, edges)).reshape(-1, mesh.dim)


def lambda_estimate(patch: ElementPatch, order: int, mesh, density: int = 4,
                    exact: bool = False) -> float:
    """Sampled lower bound of the patch constant
    max_p (max_{S(K)} |p|) / (max_{I(K)} |p|).

    By default the candidate polynomials are the generalized eigenvectors of
    the Gram matrices on the patch and on the collocation points, each
    measured on a lattice of step 1/density in every patch element.  With
    ``exact=True`` the ratio is maximized exactly over P_m for every lattice
    point (one small linear program per point), which is much slower.
    Lattices for density, 2*density, ... are nested, so the exact variant is
    non-decreasing along that sequence.
    """
    if order == 0:
        return 1.0
    xk, hk = mesh.barycenters[patch.owner], mesh.diameters[patch.owner]
    dim = mesh.dim

    def vals(points):
        return monomial_values(points, xk, hk, dim, order)

    P_I = vals(patch.collocation_points(mesh))
    if np.linalg.matrix_rank(P_I) < P_I.shape[1]:
        raise DegeneratePatchError(patch.owner, " (collocation set does not determine P_m)")
    P_S = vals(_patch_samples(mesh, patch.members, density))
    if exact:
        return max(1.0, _lp_lambda(P_I, P_S))
    P_G = vals(_patch_samples(mesh, patch.members, 2 * order))
    G_S = P_G.T @ P_G / len(P_G)
    G_I = P_I.T @ P_I
    _, vecs = scipy.linalg.eigh(G_S, G_I)
    candidates = np.hstack([vecs, np.eye(vecs.shape[0])])
    num = np.abs(P_S @ candidates).max(axis=0)
    den = np.abs(P_I @ candidates).max(axis=0)
    ok = den > 0
    return float(max(1.0, (num[ok] / den[ok]).max()))


def _lp_lambda(P_I, P_S) -> float:
    # max_s max_c { phi(s).c : |P_I c| <= 1 }
    A = np.vstack([P_I, -P_I])
    b = np.ones(len(A))
    free = [(None, None)] * P_I.shape[1]
    best = 0.0
    for row in P_S:
        res = scipy.optimize.linprog(-row, A_ub=A, b_ub=b, bounds=free, method="highs")
        if res.status != 0:
            raise RuntimeError(f"linear program failed: {res.message}")
        best = max(best, -res.fun)
    return float(best)


class ReconstructedSpace:
    """Reconstructed discontinuous space of order m (vector valued)."""

    def __init__(self, mesh, order: int, patch_size: int | None = None):
        if order < 0:
            raise ValueError("order must be non-negative")
        self.mesh = mesh
        self.dim = mesh.dim
        self.order = int(order)
        self.patch_size = int(patch_size or default_patch_size(mesh.dim, order))
        nm = n_monomials(self.dim, self.order)
        if self.patch_size < nm:
            raise PatchError(f"patch size {self.patch_size} below dim P_m = {nm}")
        self.patches = build_patches(mesh, self.patch_size)
        self.members = np.array([p.members for p in self.patches], dtype=np.int64)
        self.depths = np.array([p.depth for p in self.patches])
        owners = np.arange(mesh.n_elements)
        self.weights, self.conditions = _batched_weights(mesh, self.members, self.order, owners)
        self.centers = mesh.barycenters
        self.scales = mesh.diameters

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_elements * self.dim

    def dof(self, element: int, component: int) -> int:
        return element * self.dim + component

    def local(self, k: int) -> LocalReconstruction:
        return LocalReconstruction(k, tuple(int(x) for x in self.members[k]), self.weights[k],
                                   self.centers[k], float(self.scales[k]), self.dim, self.order,
                                   float(self.conditions[k]))

    def weights_on(self, k: int) -> list:
        """(dof element id, weight polynomial) pairs describing the space on element k."""
        loc = self.local(k)
        return [(m, loc.weight_polynomial(j)) for j, m in enumerate(loc.members)]

    def basis(self) -> ReconstructedBasis:
        return ReconstructedBasis(self.dim, self.order, self.weights, self.members,
                                  self.centers, self.scales)

    def reconstruct(self, values) -> PiecewisePolynomialField:
        """Field from one d-vector per element (a flat dof vector is accepted too)."""
        values = np.asarray(values, dtype=float).reshape(self.mesh.n_elements, self.dim)
        coeffs = np.einsum("kbj,kjc->kcb", self.weights, values[self.members])
        return PiecewisePolynomialField(self.dim, self.order, coeffs, self.centers, self.scales)

    def sample(self, func) -> np.ndarray:
        """Values of ``func`` at the element barycenters, (ne, d)."""
        return np.asarray(func(self.mesh.barycenters), dtype=float).reshape(-1, self.dim)

    def interpolate(self, func) -> PiecewisePolynomialField:
        return self.reconstruct(self.sample(func))

    @cached_property
    def lambda_estimates(self) -> np.ndarray:
        return np.array([lambda_estimate(p, self.order, self.mesh) for p in self.patches])

    @property
    def lambda_m(self) -> float:
        """max_K (1 + Lambda(m, S(K)) sqrt(#I(K) d))."""
        return float(np.max(1.0 + self.lambda_estimates * np.sqrt(self.patch_size * self.dim)))

    def write_diagnostics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["element", "n_patch", "depth", "lambda", "ls_condition"])
            for k, p in enumerate(self.patches):
                w.writerow([k, len(p), p.depth, f"{self.lambda_estimates[k]:.10g}",
                            f"{self.conditions[k]:.10g}"])


def reconstruct_field(space: ReconstructedSpace, values) -> PiecewisePolynomialField:
    return space.reconstruct(values)
