"""Vector-valued polynomials in scaled monomials ((x - c)/h)**alpha and the
curl/div/grad operators acting on their coefficients.

Two-dimensional conventions follow the embedding of the plane in R^3:
``curl v = d_x v_2 - d_y v_1`` (scalar), ``curl s = (d_y s, -d_x s)``,
``v x n = v_1 n_2 - v_2 n_1`` and ``s x n = s (-n_2, n_1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """Multi-indices of total degree <= ``degree``, graded then lexicographic
    (descending in the first variable), so lower-degree sets are prefixes."""
    out = []
    for total in range(degree + 1):
        if dim == 1:
            out.append((total,))
            continue
        for first in range(total, -1, -1):
            rest = monomial_exponents(dim - 1, total - first)
            for r in rest:
                if sum(r) == total - first:
                    out.append((first, *r))
    arr = np.array(out, dtype=np.int64).reshape(-1, dim)
    arr.setflags(write=False)
    return arr


def n_monomials(dim: int, degree: int) -> int:
    return comb(degree + dim, dim)


@lru_cache(maxsize=None)
def _index(dim: int, degree: int) -> dict:
    return {tuple(a): i for i, a in enumerate(monomial_exponents(dim, degree))}


def monomial_values(points: np.ndarray, center, scale, dim: int, degree: int) -> np.ndarray:
    """Values of the scaled monomials; ``points`` (..., dim) -> (..., n_monomials).

    ``center`` and ``scale`` broadcast against the leading axes of ``points``
    after a trailing axis is added (i.e. center (..., dim), scale (...)).
    """
    center = np.asarray(center, dtype=float)
    scale = np.asarray(scale, dtype=float)
    y = (points - center[..., None, :] if center.ndim > 1 else points - center)
    y = y / (scale[..., None, None] if scale.ndim > 0 else scale)
    exps = monomial_exponents(dim, degree)
    # powers table (..., dim, degree+1)
    powers = np.ones(y.shape + (degree + 1,))
    for k in range(1, degree + 1):
        powers[..., k] = powers[..., k - 1] * y
    out = np.ones(y.shape[:-1] + (len(exps),))
    for axis in range(dim):
        out *= powers[..., axis, exps[:, axis]]
    return out


def cross_with_normal(values: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """``w x n`` for component-last arrays; ``normal`` broadcasts against values.

    One component is a 2D scalar (-> 2D vector); two components a 2D vector
    (-> scalar); three components the usual 3D cross product.
    """
    nc = values.shape[-1]
    if nc == 1:
        s = values[..., 0]
        return np.stack([-s * normal[..., 1], s * normal[..., 0]], axis=-1)
    if nc == 2:
        return (values[..., 0] * normal[..., 1] - values[..., 1] * normal[..., 0])[..., None]
    return np.cross(values, normal)


@dataclass(frozen=True, eq=False)
class ScaledPolynomial:
    """Polynomial field sum_alpha c[:, alpha] ((x - center)/scale)**alpha."""

    dim: int
    degree: int
    coeffs: np.ndarray  # (n_components, n_monomials)
    center: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if coeffs.shape[1] != n_monomials(self.dim, self.degree):
            raise ValueError(
                f"expected {n_monomials(self.dim, self.degree)} coefficients per "
                f"component for degree {self.degree} in {self.dim}D, got {coeffs.shape[1]}"
            )
        center = np.zeros(self.dim) if self.center is None else np.asarray(self.center, float)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def zero(cls, dim, degree, n_components, center=None, scale=1.0):
        return cls(dim, degree, np.zeros((n_components, n_monomials(dim, degree))), center, scale)

    @classmethod
    def from_terms(cls, dim, degree, terms, center=None, scale=1.0):
        """Build from ``[{exponent_tuple: coeff}, ...]`` one dict per component."""
        idx = _index(dim, degree)
        c = np.zeros((len(terms), len(idx)))
        for i, comp in enumerate(terms):
            for alpha, value in comp.items():
                c[i, idx[tuple(alpha)]] += value
        return cls(dim, degree, c, center, scale)

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def evaluate(self, points) -> np.ndarray:
        """(..., dim) -> (..., n_components)."""
        points = np.asarray(points, dtype=float)
        V = monomial_values(points, self.center, self.scale, self.dim, self.degree)
        return V @ self.coeffs.T

    def _like(self, coeffs, degree):
        return ScaledPolynomial(self.dim, degree, coeffs, self.center, self.scale)

    def __add__(self, other):
        self._check_compatible(other)
        deg = max(self.degree, other.degree)
        return self._like(self.elevate(deg).coeffs + other.elevate(deg).coeffs, deg)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, a):
        return self._like(a * self.coeffs, self.degree)

    def __neg__(self):
        return (-1.0) * self

    def _check_compatible(self, other):
        if (self.dim != other.dim or self.n_components != other.n_components
                or self.scale != other.scale or not np.array_equal(self.center, other.center)):
            raise ValueError("incompatible polynomials")

    def elevate(self, degree: int) -> "ScaledPolynomial":
        if degree < self.degree:
            raise ValueError("cannot lower the degree")
        if degree == self.degree:
            return self
        c = np.zeros((self.n_components, n_monomials(self.dim, degree)))
        c[:, : self.coeffs.shape[1]] = self.coeffs
        return self._like(c, degree)

    def component(self, i: int) -> "ScaledPolynomial":
        return self._like(self.coeffs[i : i + 1], self.degree)

    def partial(self, axis: int) -> "ScaledPolynomial":
        """Derivative in x_axis; the result has degree max(degree - 1, 0)."""
        new_degree = max(self.degree - 1, 0)
        out = np.zeros((self.n_components, n_monomials(self.dim, new_degree)))
        target = _index(self.dim, new_degree)
        for j, alpha in enumerate(monomial_exponents(self.dim, self.degree)):
            a = int(alpha[axis])
            if a == 0:
                continue
            beta = list(alpha)
            beta[axis] -= 1
            out[:, target[tuple(beta)]] += a * self.coeffs[:, j] / self.scale
        return self._like(out, new_degree)

    def curl(self) -> "ScaledPolynomial":
        return curl(self)

    def div(self) -> "ScaledPolynomial":
        return div(self)

    def grad(self) -> "ScaledPolynomial":
        return grad(self)

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    @cached_property
    def chain(self) -> "CurlChain":
        return CurlChain.of(self)


def _stack(parts, like: ScaledPolynomial) -> ScaledPolynomial:
    degree = max(p.degree for p in parts)
    coeffs = np.vstack([p.elevate(degree).coeffs for p in parts])
    return ScaledPolynomial(like.dim, degree, coeffs, like.center, like.scale)


def curl(v: ScaledPolynomial) -> ScaledPolynomial:
    """Curl of a vector field (scalar in 2D).  A 2D scalar is handed to
    :func:`curl_of_scalar`, so curl can be iterated in the plane."""
    if v.dim == 2:
        if v.n_components == 1:
            return curl_of_scalar(v)
        if v.n_components != 2:
            raise ValueError("2D curl needs a scalar or a 2-vector")
        return v.component(1).partial(0) - v.component(0).partial(1)
    if v.n_components != 3:
        raise ValueError("3D curl needs a 3-vector")
    d = [[v.component(i).partial(j) for j in range(3)] for i in range(3)]
    return _stack([d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]], v)


def curl_of_scalar(s: ScaledPolynomial, dim: int = 2) -> ScaledPolynomial:
    """Rotated gradient ``(d_y s, -d_x s)`` of a planar scalar field."""
    if dim != 2 or s.dim != 2:
        raise ValueError("curl of a scalar field is only defined in 2D")
    if s.n_components != 1:
        raise ValueError("expected a scalar field")
    return _stack([s.partial(1), -s.partial(0)], s)


def div(v: ScaledPolynomial) -> ScaledPolynomial:
    if v.n_components != v.dim:
        raise ValueError("divergence needs a dim-vector")
    out = v.component(0).partial(0)
    for i in range(1, v.dim):
        out = out + v.component(i).partial(i)
    return out


def grad(s: ScaledPolynomial) -> ScaledPolynomial:
    if s.n_components != 1:
        raise ValueError("gradient needs a scalar field")
    return _stack([s.partial(i) for i in range(s.dim)], s)


@dataclass(frozen=True, eq=False)
class CurlChain:
    curl: ScaledPolynomial
    curl2: ScaledPolynomial
    curl3: ScaledPolynomial
    div: ScaledPolynomial

    @classmethod
    def of(cls, v: ScaledPolynomial) -> "CurlChain":
        c1 = curl(v)
        c2 = curl(c1)
        return cls(c1, c2, curl(c2), div(v))


# quantity name -> (derivative order, builder)
_OPERATORS = {
    "value": (0, lambda v: v),
    "curl": (1, curl),
    "curl2": (2, lambda v: curl(curl(v))),
    "curl3": (3, lambda v: curl(curl(curl(v)))),
    "div": (1, div),
}

QUANTITIES = tuple(_OPERATORS)


def n_outputs(quantity: str, dim: int) -> int:
    if quantity == "value":
        return dim
    if quantity == "div":
        return 1
    if dim == 3:
        return 3
    return 1 if quantity in ("curl", "curl3") else 2


def derivative_order(quantity: str) -> int:
    return _OPERATORS[quantity][0]


@lru_cache(maxsize=None)
def operator_tensor(quantity: str, dim: int, degree: int) -> np.ndarray:
    """Linear map of a unit-scale operator on coefficient arrays.

    Returns T with shape (n_out, dim, n_mono(degree), n_mono(degree)) such that
    the coefficients of ``quantity(v)`` are ``sum_{i,b} T[o, i, a, b] c[i, b]``
    for a field with coefficients c (dim, n_mono).  For scale h the result is
    multiplied by h**(-derivative_order).  Output monomials are padded to the
    input degree.
    """
    _, op = _OPERATORS[quantity]
    nm = n_monomials(dim, degree)
    nout = n_outputs(quantity, dim)
    T = np.zeros((nout, dim, nm, nm))
    for i in range(dim):
        for b in range(nm):
            c = np.zeros((dim, nm))
            c[i, b] = 1.0
            res = op(ScaledPolynomial(dim, degree, c))
            T[:, i, : res.coeffs.shape[1], b] = res.coeffs
    T.setflags(write=False)
    return T
