"""Discrete norms of the mixed scheme and experimental orders of convergence."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import _combined, form_c
from .fields import Difference
from .quadrature import cell_quadrature, face_quadrature


@dataclass
class ErrorRecord:
    h: float
    n_elements: int
    l2_u: float
    dg_u: float
    energy_u: float
    dg_p: float
    lambda_m: float = float("nan")
    solve_seconds: float = float("nan")


def _all_elements(mesh):
    return np.arange(mesh.n_elements)


def _volume_sq(mesh, field, quantity, cq):
    vals = field.evaluate(quantity, _all_elements(mesh), cq.points)[..., 0]
    return float(np.einsum("nqc,nqc,nq->", vals, vals, cq.weights))


def l2_norm(field, mesh, degree: int) -> float:
    cq = cell_quadrature(mesh, degree)
    return math.sqrt(_volume_sq(mesh, field, "value", cq))


def l2_error(u_h, u_exact, mesh, degree: int) -> float:
    return l2_norm(Difference(u_exact, u_h), mesh, degree)


def _face_sums(field, mesh, degree, with_averages):
    fq = face_quadrature(mesh, degree)
    sums = dict.fromkeys(("vxn", "cxn", "nv", "c3", "c2"), 0.0)
    quantities = ("vxn", "cxn", "nv") + (("c3", "c2") if with_averages else ())
    for faces in (mesh.interior_faces, mesh.boundary_faces):
        if len(faces) == 0:
            continue
        tr = _combined(field, mesh, faces, fq.points[faces], quantities, "sum")
        he = mesh.face_diameters[faces]
        w = fq.weights[faces]
        scale = {"vxn": he**-3, "cxn": he**-1, "nv": he**-1, "c3": he**3, "c2": he}
        interior = not mesh.boundary[faces[0]]
        for q in quantities:
            if q == "nv" and not interior:
                continue
            x = tr[q][..., 0]
            sums[q] += float(np.einsum("nqc,nqc,nq,n->", x, x, w, scale[q]))
    return sums


def dg_norm_squared_terms(field, mesh, degree: int, with_averages: bool = False) -> dict:
    cq = cell_quadrature(mesh, degree)
    terms = {"curl2": _volume_sq(mesh, field, "curl2", cq), "div": _volume_sq(mesh, field, "div", cq)}
    terms.update(_face_sums(field, mesh, degree, with_averages))
    return terms


def dg_norm(field, mesh, degree: int) -> float:
    """Mesh-dependent norm: broken curl^2 and div, h^-3 [v x n], h^-1 [curl v x n],
    and h^-1 [n . v] on interior faces."""
    t = dg_norm_squared_terms(field, mesh, degree)
    return math.sqrt(t["curl2"] + t["div"] + t["vxn"] + t["cxn"] + t["nv"])


def energy_norm(field, mesh, degree: int) -> float:
    """DG norm plus h^3 |{curl^3 v}|^2 and h |{curl^2 v}|^2 face averages."""
    t = dg_norm_squared_terms(field, mesh, degree, with_averages=True)
    return math.sqrt(sum(t.values()))


def p_norm(p, mesh) -> float:
    """sqrt(sum_e h_e ||[p]||^2) for piecewise constant p."""
    return math.sqrt(max(form_c(mesh, p, p), 0.0))


def compute_eoc(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    """log_ratio(e_coarse / e_fine); NaN when either error is not positive."""
    if not (e_coarse > 0 and e_fine > 0) or not (math.isfinite(e_coarse) and math.isfinite(e_fine)):
        return float("nan")
    return math.log(e_coarse / e_fine) / math.log(ratio)
