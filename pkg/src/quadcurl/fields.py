"""Uniform evaluation interface for discrete and analytic vector fields.

Every field answers ``evaluate(quantity, elements, points)`` with an array of
shape ``(nb, nq, n_out, n_fun)``: ``points`` is ``(nb, nq, dim)`` and
``elements[i]`` is the element whose polynomial is used for ``points[i]``.
``n_fun`` is 1 for ordinary fields and the local basis size for a basis.
Quantities are ``value, curl, curl2, curl3, div`` (see
:mod:`quadcurl.polynomials` for the 2D conventions).
"""
from __future__ import annotations

import numpy as np

from .polynomials import derivative_order, monomial_values, n_outputs, operator_tensor


class PiecewisePolynomialField:
    """Broken polynomial field with one scaled-monomial expansion per element."""

    def __init__(self, dim, degree, coeffs, centers, scales):
        self.dim = dim
        self.degree = degree
        self.coeffs = np.asarray(coeffs, dtype=float)  # (ne, d, n_mono)
        self.centers = np.asarray(centers, dtype=float)
        self.scales = np.asarray(scales, dtype=float)

    def evaluate(self, quantity, elements, points):
        T = operator_tensor(quantity, self.dim, self.degree)
        V = monomial_values(points, self.centers[elements], self.scales[elements],
                            self.dim, self.degree)
        C = np.einsum("oiac,nic->noa", T, self.coeffs[elements])
        C *= self.scales[elements][:, None, None] ** (-derivative_order(quantity))
        return np.einsum("nqa,noa->nqo", V, C)[..., None]

    def __sub__(self, other):
        return Difference(self, other)

    def __rsub__(self, other):
        return Difference(other, self)


class ReconstructedBasis:
    """All reconstructed basis functions, restricted element by element.

    On element K the local basis is ``lambda_{K,j} e_i`` for patch member j and
    component i, flattened as ``j * dim + i``; its global dof is
    ``members[K, j] * dim + i``.
    """

    def __init__(self, dim, degree, weights, members, centers, scales):
        self.dim = dim
        self.degree = degree
        self.weights = weights  # (ne, n_mono, nS)
        self.members = members  # (ne, nS)
        self.centers = centers
        self.scales = scales

    @property
    def n_local(self) -> int:
        return self.members.shape[1] * self.dim

    def dofs(self, elements) -> np.ndarray:
        d = self.dim
        return (self.members[elements][:, :, None] * d + np.arange(d)).reshape(len(elements), -1)

    def evaluate(self, quantity, elements, points):
        T = operator_tensor(quantity, self.dim, self.degree)
        V = monomial_values(points, self.centers[elements], self.scales[elements],
                            self.dim, self.degree)
        VT = np.einsum("nqa,oiac->nqoic", V, T)
        out = np.einsum("nqoic,ncj->nqoji", VT, self.weights[elements])
        out *= self.scales[elements][:, None, None, None, None] ** (-derivative_order(quantity))
        nb, nq, no = out.shape[:3]
        return out.reshape(nb, nq, no, -1)


class AnalyticField:
    """Closed-form field; ``functions`` maps quantity -> f(points) -> (..., n_out)."""

    def __init__(self, dim, functions):
        self.dim = dim
        self.functions = dict(functions)

    def evaluate(self, quantity, elements, points):
        if quantity not in self.functions:
            raise KeyError(f"analytic field does not provide {quantity!r}")
        vals = np.asarray(self.functions[quantity](points), dtype=float)
        return vals.reshape(points.shape[:-1] + (n_outputs(quantity, self.dim),))[..., None]

    def __sub__(self, other):
        return Difference(self, other)


class Difference:
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.dim = a.dim

    def evaluate(self, quantity, elements, points):
        return self.a.evaluate(quantity, elements, points) - self.b.evaluate(quantity, elements, points)


class ZeroField:
    def __init__(self, dim):
        self.dim = dim

    def evaluate(self, quantity, elements, points):
        return np.zeros(points.shape[:-1] + (n_outputs(quantity, self.dim), 1))


def polynomial_field(poly, dim=None) -> AnalyticField:
    """Wrap a global :class:`ScaledPolynomial` as an analytic field."""
    from .polynomials import curl, div

    c1 = curl(poly)
    c2 = curl(c1)
    c3 = curl(c2)
    dv = div(poly)
    return AnalyticField(poly.dim, {
        "value": poly.evaluate, "curl": c1.evaluate, "curl2": c2.evaluate,
        "curl3": c3.evaluate, "div": dv.evaluate,
    })
