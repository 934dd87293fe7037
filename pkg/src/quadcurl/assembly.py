"""Assembly and solution of the mixed interior-penalty system

    [ A  B^T ] [u]   [F]
    [ B  -C  ] [p] = [0]

for the reconstructed vector space and piecewise-constant multipliers.

Face conventions: on an interior face with normal n pointing from K+ to K-,
``[w x n] = (w+ - w-) x n``, ``[n . w] = n . (w+ - w-)``,
``{w} = (w+ + w-)/2``; on a boundary face the jump is the outward trace and
the average is the trace itself.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .polynomials import cross_with_normal
from .quadrature import cell_quadrature, face_quadrature

logger = logging.getLogger(__name__)

DEFAULT_ETA = {2: 30.0, 3: 40.0}

# local matrix entries per chunk
_CHUNK_ENTRIES = 2_000_000


class SingularSystemError(RuntimeError):
    pass


@dataclass(frozen=True)
class PenaltyConfig:
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"penalty eta must be positive, got {self.eta}")

    def mu1(self, h_e):
        return self.eta / np.asarray(h_e) ** 3

    def mu2(self, h_e):
        return self.eta / np.asarray(h_e)

    def normal_jump(self, h_e):
        return self.eta / np.asarray(h_e)

    @classmethod
    def default(cls, dim: int) -> "PenaltyConfig":
        return cls(DEFAULT_ETA[dim])


def matrix_degree(order: int) -> int:
    return max(2 * order, 1)


def data_degree(order: int) -> int:
    return 2 * order + 4


def face_traces(field, mesh, faces, points, quantities, side):
    """Signed jump / weighted average contributions from one side of ``faces``.

    Returns a dict of arrays (nb, nq, n_comp, n_fun):
    ``vxn`` [v x n], ``cxn`` [curl v x n], ``nv`` [n . v] (one component),
    ``c2`` {curl^2 v}, ``c3`` {curl^3 v}, ``val`` trace, ``avgval`` {v}.
    Summing side 0 and side 1 gives the full jump/average.
    """
    elems = mesh.face_elements[faces, side]
    n = mesh.normals[faces][:, None, None, :]
    sign = 1.0 if side == 0 else -1.0
    avg = np.where(mesh.boundary[faces], 1.0, 0.5)[:, None, None, None]
    out = {}
    cache = {}

    def get(q):
        if q not in cache:
            cache[q] = field.evaluate(q, elems, points)
        return cache[q]

    def crossed(q):
        v = np.moveaxis(get(q), -1, -2)  # (nb, nq, nfun, nc)
        return sign * np.moveaxis(cross_with_normal(v, n), -1, -2)

    for q in quantities:
        if q == "vxn":
            out[q] = crossed("value")
        elif q == "cxn":
            out[q] = crossed("curl")
        elif q == "nv":
            out[q] = sign * np.einsum("nqcf,nxyc->nqf", get("value"), n)[:, :, None, :]
        elif q == "c2":
            out[q] = avg * get("curl2")
        elif q == "c3":
            out[q] = avg * get("curl3")
        elif q == "val":
            out[q] = get("value")
        elif q == "avgval":
            out[q] = avg * get("value")
        else:
            raise KeyError(q)
    return out


def _combined(field, mesh, faces, points, quantities, mode):
    """Traces over both sides: concatenated along the basis axis
    (``mode='concat'``) or summed (``mode='sum'``)."""
    plus = face_traces(field, mesh, faces, points, quantities, 0)
    interior = mesh.face_elements[faces, 1] >= 0
    if not np.any(interior):
        return plus
    if not np.all(interior):
        raise ValueError("face batch mixes interior and boundary faces")
    minus = face_traces(field, mesh, faces, points, quantities, 1)
    if mode == "concat":
        return {q: np.concatenate([plus[q], minus[q]], axis=-1) for q in quantities}
    return {q: plus[q] + minus[q] for q in quantities}


def _chunks(n, size):
    for start in range(0, n, max(size, 1)):
        yield np.arange(start, min(start + size, n))


class _Triplets:
    def __init__(self, shape):
        self.shape = shape
        self.total = sp.csr_matrix(shape)
        self.rows, self.cols, self.vals = [], [], []
        self.count = 0

    def add(self, rows, cols, vals):
        self.rows.append(rows.ravel())
        self.cols.append(cols.ravel())
        self.vals.append(vals.ravel())
        self.count += vals.size
        if self.count > 4 * _CHUNK_ENTRIES:
            self.flush()

    def flush(self):
        if self.rows:
            m = sp.coo_matrix(
                (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
                shape=self.shape,
            ).tocsr()
            self.total = self.total + m
            self.rows, self.cols, self.vals = [], [], []
            self.count = 0

    def matrix(self):
        self.flush()
        m = self.total.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return m


def _outer(local_rows, local_cols):
    r = np.broadcast_to(local_rows[:, :, None], local_rows.shape + (local_cols.shape[1],))
    c = np.broadcast_to(local_cols[:, None, :], r.shape)
    return r, c


def assemble_a(mesh, space, penalties: PenaltyConfig, degree: int | None = None):
    """Matrix of a(., .): entry (i, j) = a(phi_j, phi_i)."""
    basis = space.basis()
    degree = degree or matrix_degree(space.order)
    nloc = basis.n_local
    N = space.n_dofs
    acc = _Triplets((N, N))

    cq = cell_quadrature(mesh, degree)
    chunk = _CHUNK_ENTRIES // nloc**2
    for el in _chunks(mesh.n_elements, chunk):
        pts, w = cq.points[el], cq.weights[el]
        c2 = basis.evaluate("curl2", el, pts)
        dv = basis.evaluate("div", el, pts)
        loc = np.einsum("nqci,nqcj,nq->nij", c2, c2, w) + np.einsum("nqci,nqcj,nq->nij", dv, dv, w)
        dofs = basis.dofs(el)
        r, c = _outer(dofs, dofs)
        acc.add(r, c, loc)

    fq = face_quadrature(mesh, degree)
    quantities = ("vxn", "cxn", "nv", "c2", "c3")
    for faces_all, nsides in ((mesh.interior_faces, 2), (mesh.boundary_faces, 1)):
        chunk = _CHUNK_ENTRIES // (nsides * nloc) ** 2
        for idx in _chunks(len(faces_all), chunk):
            faces = faces_all[idx]
            pts, w = fq.points[faces], fq.weights[faces]
            tr = _combined(basis, mesh, faces, pts, quantities, "concat")
            he = mesh.face_diameters[faces]
            mu1 = penalties.mu1(he)[:, None]
            mu2 = penalties.mu2(he)[:, None]
            J0, J1, A3, A2 = tr["vxn"], tr["cxn"], tr["c3"], tr["c2"]
            cons = np.einsum("nqci,nqcj,nq->nij", A3, J0, w) + np.einsum("nqci,nqcj,nq->nij", A2, J1, w)
            loc = cons + np.swapaxes(cons, 1, 2)
            loc += np.einsum("nqci,nqcj,nq->nij", J0, J0, w * mu1)
            loc += np.einsum("nqci,nqcj,nq->nij", J1, J1, w * mu2)
            if nsides == 2:
                Jn = tr["nv"]
                loc += np.einsum("nqci,nqcj,nq->nij", Jn, Jn, w * penalties.normal_jump(he)[:, None])
            dofs = np.concatenate([basis.dofs(mesh.face_elements[faces, s]) for s in range(nsides)], axis=1)
            r, c = _outer(dofs, dofs)
            acc.add(r, c, loc)
    return acc.matrix()


def assemble_b(mesh, space, degree: int | None = None):
    """Matrix of b(q, v): row = multiplier element, column = velocity dof."""
    basis = space.basis()
    degree = degree or matrix_degree(space.order)
    ne, N = mesh.n_elements, space.n_dofs
    acc = _Triplets((ne, N))
    cq = cell_quadrature(mesh, degree)
    nloc = basis.n_local
    for el in _chunks(ne, _CHUNK_ENTRIES // nloc):
        dv = basis.evaluate("div", el, cq.points[el])
        loc = np.einsum("nqi,nq->ni", dv[:, :, 0, :], cq.weights[el])
        dofs = basis.dofs(el)
        acc.add(np.broadcast_to(el[:, None], dofs.shape), dofs, loc)

    fq = face_quadrature(mesh, degree)
    faces_all = mesh.interior_faces
    for idx in _chunks(len(faces_all), _CHUNK_ENTRIES // (2 * nloc)):
        faces = faces_all[idx]
        tr = _combined(basis, mesh, faces, fq.points[faces], ("nv",), "concat")
        jn = np.einsum("nqi,nq->ni", tr["nv"][:, :, 0, :], fq.weights[faces])
        dofs = np.concatenate([basis.dofs(mesh.face_elements[faces, s]) for s in range(2)], axis=1)
        for s in range(2):
            rows = np.broadcast_to(mesh.face_elements[faces, s][:, None], dofs.shape)
            acc.add(rows, dofs, -0.5 * jn)
    return acc.matrix()


def assemble_c(mesh):
    """Matrix of c(p, q) = sum_e h_e int_e [p][q] over all faces."""
    wgt = mesh.face_diameters * mesh.face_areas
    kp, km = mesh.face_elements[:, 0], mesh.face_elements[:, 1]
    inner = km >= 0
    rows = np.concatenate([kp, kp[inner], km[inner], km[inner]])
    cols = np.concatenate([kp, km[inner], kp[inner], km[inner]])
    vals = np.concatenate([wgt, -wgt[inner], -wgt[inner], wgt[inner]])
    m = sp.coo_matrix((vals, (rows, cols)), shape=(mesh.n_elements,) * 2).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_rhs(mesh, space, penalties: PenaltyConfig, f=None, g1=None, g2=None,
                 degree: int | None = None):
    """Load vector of F(v) = int f.v + boundary terms with g1 = u x n, g2 = curl u x n.

    ``f(points)`` returns (..., d); ``g1(points, normals)`` and
    ``g2(points, normals)`` return the tangential traces in the component
    layout of ``v x n`` and ``curl v x n``.
    """
    basis = space.basis()
    degree = degree or data_degree(space.order)
    N = space.n_dofs
    F = np.zeros(N)
    nloc = basis.n_local
    if f is not None:
        cq = cell_quadrature(mesh, degree)
        for el in _chunks(mesh.n_elements, _CHUNK_ENTRIES // (nloc * 8)):
            pts = cq.points[el]
            vals = basis.evaluate("value", el, pts)
            fv = np.asarray(f(pts), dtype=float)
            loc = np.einsum("nqci,nqc,nq->ni", vals, fv, cq.weights[el])
            np.add.at(F, basis.dofs(el), loc)
    if g1 is not None or g2 is not None:
        fq = face_quadrature(mesh, degree)
        faces = mesh.boundary_faces
        pts, w = fq.points[faces], fq.weights[faces]
        normals = np.broadcast_to(mesh.normals[faces][:, None, :], pts.shape)
        he = mesh.face_diameters[faces]
        tr = face_traces(basis, mesh, faces, pts, ("vxn", "cxn", "c2", "c3"), 0)
        loc = np.zeros((len(faces), nloc))
        if g1 is not None:
            gv = np.asarray(g1(pts, normals), dtype=float).reshape(tr["c3"].shape[:3])
            test = tr["c3"] + penalties.mu1(he)[:, None, None, None] * tr["vxn"]
            loc += np.einsum("nqci,nqc,nq->ni", test, gv, w)
        if g2 is not None:
            gv = np.asarray(g2(pts, normals), dtype=float).reshape(tr["c2"].shape[:3])
            test = tr["c2"] + penalties.mu2(he)[:, None, None, None] * tr["cxn"]
            loc += np.einsum("nqci,nqc,nq->ni", test, gv, w)
        np.add.at(F, basis.dofs(mesh.face_elements[faces, 0]), loc)
    return F


@dataclass
class MixedSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    rhs_u: np.ndarray
    dim: int
    penalties: PenaltyConfig = field(default=None)

    @property
    def n_elements(self) -> int:
        return self.C.shape[0]

    def dof(self, element: int, component: int) -> int:
        return element * self.dim + component

    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A, self.B.T], [self.B, -self.C]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.rhs_u, np.zeros(self.n_elements)])

    def dump(self, prefix) -> list:
        """Write A, B, C and the load vector in coordinate text format."""
        paths = []
        for name, mat in (("A", self.A), ("B", self.B), ("C", self.C)):
            path = f"{prefix}_{name}.txt"
            write_coordinate(mat, path)
            paths.append(path)
        path = f"{prefix}_F.txt"
        np.savetxt(path, self.rhs_u, fmt="%.17g")
        paths.append(path)
        return paths


def write_coordinate(mat, path) -> None:
    coo = sp.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}\n")


def read_coordinate(path) -> sp.csr_matrix:
    data = np.loadtxt(path, skiprows=1, ndmin=2)
    with open(path) as fh:
        nr, nc, _ = (int(x) for x in fh.readline().split())
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(nr, nc)).tocsr()


def assemble_system(mesh, space, penalties: PenaltyConfig, f=None, g1=None, g2=None) -> MixedSystem:
    A = assemble_a(mesh, space, penalties)
    B = assemble_b(mesh, space)
    C = assemble_c(mesh)
    F = assemble_rhs(mesh, space, penalties, f, g1, g2)
    return MixedSystem(A, B, C, F, mesh.dim, penalties)


@dataclass
class SaddleSolution:
    u: np.ndarray
    p: np.ndarray
    residual: float


def solve_saddle(A, B, C, rhs, tol: float = 1e-9) -> SaddleSolution:
    """Direct sparse LU solve of the symmetric indefinite block system.

    The matrix is symmetrically scaled by |diag|^(-1/2) and reordered with
    reverse Cuthill-McKee; SuperLU keeps partial pivoting, so zero or
    negative diagonal entries of the indefinite system are tolerated.
    """
    n = A.shape[0]
    K = sp.bmat([[A, B.T], [B, -C]], format="csr")
    b = np.concatenate([rhs, np.zeros(B.shape[0])])
    diag = np.abs(K.diagonal())
    scale = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    D = sp.diags(scale)
    Ks = (D @ K @ D).tocsr()
    perm = reverse_cuthill_mckee(Ks, symmetric_mode=True)
    Kp = Ks[perm][:, perm].tocsc()
    try:
        lu = spla.splu(Kp, permc_spec="NATURAL")
    except RuntimeError as exc:
        raise SingularSystemError(
            f"system singular or penalty too small ({exc}); try a larger eta"
        ) from exc

    def apply_inverse(r):
        y = lu.solve((scale * r)[perm])
        out = np.empty_like(y)
        out[perm] = y
        return scale * out

    x = apply_inverse(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("system singular or penalty too small; try a larger eta")
    bnorm = np.linalg.norm(b) or 1.0
    res = np.linalg.norm(K @ x - b) / bnorm
    for _ in range(2):
        if res <= tol * 1e-3:
            break
        x += apply_inverse(b - K @ x)
        res = np.linalg.norm(K @ x - b) / bnorm
    if res > tol:
        raise SingularSystemError(
            f"relative residual {res:.3e} exceeds {tol:g}: system singular or penalty too small"
        )
    logger.debug("saddle solve: n=%d residual=%.3e", K.shape[0], res)
    return SaddleSolution(x[:n], x[n:], float(res))


# --- direct form evaluation (independent of the matrix scatter) -------------

def _volume(mesh, qa, fa, qb, fb, cq):
    el = np.arange(mesh.n_elements)
    va = fa.evaluate(qa, el, cq.points)[..., 0]
    vb = fb.evaluate(qb, el, cq.points)[..., 0]
    return float(np.einsum("nqc,nqc,nq->", va, vb, cq.weights))


def form_a(mesh, u, v, penalties: PenaltyConfig, degree: int) -> float:
    """a(u, v) evaluated by quadrature on two fields."""
    cq = cell_quadrature(mesh, degree)
    total = _volume(mesh, "curl2", u, "curl2", v, cq) + _volume(mesh, "div", u, "div", v, cq)
    fq = face_quadrature(mesh, degree)
    quantities = ("vxn", "cxn", "nv", "c2", "c3")
    for faces in (mesh.interior_faces, mesh.boundary_faces):
        if len(faces) == 0:
            continue
        pts, w = fq.points[faces], fq.weights[faces]
        tu = {k: x[..., 0] for k, x in _combined(u, mesh, faces, pts, quantities, "sum").items()}
        tv = {k: x[..., 0] for k, x in _combined(v, mesh, faces, pts, quantities, "sum").items()}
        he = mesh.face_diameters[faces]

        def integ(x, y, weight=None):
            ww = w if weight is None else w * weight[:, None]
            return float(np.einsum("nqc,nqc,nq->", x, y, ww))

        total += integ(tu["vxn"], tv["c3"]) + integ(tu["cxn"], tv["c2"])
        total += integ(tv["vxn"], tu["c3"]) + integ(tv["cxn"], tu["c2"])
        total += integ(tu["vxn"], tv["vxn"], penalties.mu1(he))
        total += integ(tu["cxn"], tv["cxn"], penalties.mu2(he))
        if not mesh.boundary[faces[0]]:
            total += integ(tu["nv"], tv["nv"], penalties.normal_jump(he))
    return total


def form_b(mesh, p, v, degree: int) -> float:
    """b(p, v) for piecewise-constant p (ne,) and a vector field v."""
    p = np.asarray(p, dtype=float)
    cq = cell_quadrature(mesh, degree)
    el = np.arange(mesh.n_elements)
    dv = v.evaluate("div", el, cq.points)[:, :, 0, 0]
    total = float(np.einsum("nq,nq,n->", dv, cq.weights, p))
    faces = mesh.interior_faces
    if len(faces):
        fq = face_quadrature(mesh, degree)
        tr = _combined(v, mesh, faces, fq.points[faces], ("nv",), "sum")["nv"][:, :, 0, 0]
        pav = 0.5 * (p[mesh.face_elements[faces, 0]] + p[mesh.face_elements[faces, 1]])
        total -= float(np.einsum("nq,nq,n->", tr, fq.weights[faces], pav))
    return total


def form_c(mesh, p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    kp, km = mesh.face_elements[:, 0], mesh.face_elements[:, 1]
    jp = p[kp] - np.where(km >= 0, p[np.maximum(km, 0)], 0.0)
    jq = q[kp] - np.where(km >= 0, q[np.maximum(km, 0)], 0.0)
    return float(np.sum(mesh.face_diameters * mesh.face_areas * jp * jq))


def form_E(mesh, u, p, v, q, penalties: PenaltyConfig, degree: int) -> float:
    """E(u, p; v, q) = a(u, v) + b(p, v) - b(q, u) + c(p, q)."""
    return (form_a(mesh, u, v, penalties, degree) + form_b(mesh, p, v, degree)
            - form_b(mesh, q, u, degree) + form_c(mesh, p, q))


def form_F(mesh, v, penalties: PenaltyConfig, f, g1, g2, degree: int) -> float:
    """F(v) evaluated by quadrature on a field (no basis scatter)."""
    total = 0.0
    if f is not None:
        cq = cell_quadrature(mesh, degree)
        el = np.arange(mesh.n_elements)
        vals = v.evaluate("value", el, cq.points)[..., 0]
        total += float(np.einsum("nqc,nqc,nq->", vals, f(cq.points), cq.weights))
    fq = face_quadrature(mesh, degree)
    faces = mesh.boundary_faces
    pts, w = fq.points[faces], fq.weights[faces]
    normals = np.broadcast_to(mesh.normals[faces][:, None, :], pts.shape)
    he = mesh.face_diameters[faces]
    tr = {k: x[..., 0] for k, x in face_traces(v, mesh, faces, pts, ("vxn", "cxn", "c2", "c3"), 0).items()}
    if g1 is not None:
        gv = np.asarray(g1(pts, normals)).reshape(tr["c3"].shape)
        total += float(np.einsum("nqc,nqc,nq->", tr["c3"] + penalties.mu1(he)[:, None, None] * tr["vxn"], gv, w))
    if g2 is not None:
        gv = np.asarray(g2(pts, normals)).reshape(tr["c2"].shape)
        total += float(np.einsum("nqc,nqc,nq->", tr["c2"] + penalties.mu2(he)[:, None, None] * tr["cxn"], gv, w))
    return total
