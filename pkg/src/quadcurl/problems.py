"""Manufactured solutions with closed-form curl chains, boundary data and a
finite-difference oracle that guards the hand-derived right-hand sides."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import AnalyticField
from .polynomials import ScaledPolynomial, cross_with_normal, curl, div, n_monomials

PI = np.pi


class ManufacturedSolutionError(AssertionError):
    pass


# --- finite differences -------------------------------------------------------

def fd_jacobian(F: Callable, step: float) -> Callable:
    """Sixth-order central differences (two Richardson steps on the
    second-order stencil).  Returns J with J(x)[..., c, j] = dF_c/dx_j."""
    offsets = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    coef = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0
    ns = len(offsets)

    def J(x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        shifts = offsets[:, None, None] * step * np.eye(d)[None, :, :]  # (ns, d, d)
        xs = x[None, None, ...] + shifts.reshape(ns, d, *([1] * (x.ndim - 1)), d)
        vals = np.asarray(F(xs))  # (ns, d, ..., nc)
        return np.moveaxis(np.tensordot(coef, vals, axes=(0, 0)) / step, 0, -1)

    return J


def fd_curl(F: Callable, dim: int, step: float) -> Callable:
    """Curl by finite differences (component-last layout, 2D conventions
    as in :mod:`quadcurl.polynomials`)."""
    J = fd_jacobian(F, step)

    def curl_fd(x):
        j = J(x)
        if dim == 2:
            if j.shape[-2] == 1:
                return np.stack([j[..., 0, 1], -j[..., 0, 0]], axis=-1)
            return (j[..., 1, 0] - j[..., 0, 1])[..., None]
        return np.stack([j[..., 2, 1] - j[..., 1, 2],
                         j[..., 0, 2] - j[..., 2, 0],
                         j[..., 1, 0] - j[..., 0, 1]], axis=-1)

    return curl_fd


def fd_div(F: Callable, step: float) -> Callable:
    J = fd_jacobian(F, step)
    return lambda x: np.trace(J(x), axis1=-2, axis2=-1)[..., None]


# --- problem container --------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact solution of curl^4 u = f, div u = 0, with p = 0.

    All callables map points (..., dim) to (..., n_components).
    """

    name: str
    dim: int
    u: Callable
    curl_u: Callable
    curl2_u: Callable
    curl3_u: Callable
    div_u: Callable
    f: Callable

    def g1(self, points, normals):
        """Tangential trace u x n."""
        return cross_with_normal(self.u(points), normals)

    def g2(self, points, normals):
        """(curl u) x n."""
        return cross_with_normal(self.curl_u(points), normals)

    def p(self, points):
        return np.zeros(np.shape(points)[:-1] + (1,))

    def exact_field(self) -> AnalyticField:
        return AnalyticField(self.dim, {
            "value": self.u, "curl": self.curl_u, "curl2": self.curl2_u,
            "curl3": self.curl3_u, "div": self.div_u,
        })

    def validate(self, n_points: int = 20, seed: int = 0, fd_step: float = 1e-2,
                 tol: float = 1e-5, div_tol: float = 1e-12) -> dict:
        """Check div u = 0 and compare the closed forms with nested finite
        differences of u; raise :class:`ManufacturedSolutionError` on mismatch."""
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.1, 0.9, size=(max(n_points, 100), self.dim))
        dv = np.abs(self.div_u(pts)).max()
        if dv > div_tol:
            raise ManufacturedSolutionError(f"{self.name}: |div u| = {dv:.3e} > {div_tol:g}")
        pts = pts[:n_points]
        report = {"div": float(dv)}
        floor = max(np.abs(self.u(pts)).max(), 1e-300)
        chain = [self.u]
        for _ in range(4):
            chain.append(fd_curl(chain[-1], self.dim, fd_step))
        for k, closed in enumerate((self.curl_u, self.curl2_u, self.curl3_u, self.f), start=1):
            ref = chain[k](pts)
            got = closed(pts)
            # relative to the derivative, floored by |u| for chains that end in 0
            err = np.abs(ref - got).max() / max(np.abs(ref).max(), floor)
            report[f"curl{k}"] = float(err)
            if err > tol:
                raise ManufacturedSolutionError(
                    f"{self.name}: closed-form curl^{k} u differs from finite differences "
                    f"(relative error {err:.3e} > {tol:g})")
        return report


# --- Example 1: 2D, stream function sin^3(pi x) sin^3(pi y) -------------------

def _sin3_derivative(t, k):
    # sin^3 = (3 sin(pi t) - sin(3 pi t)) / 4
    return (3 * PI**k * np.sin(PI * t + k * PI / 2)
            - (3 * PI) ** k * np.sin(3 * PI * t + k * PI / 2)) / 4


def _psi(x, a, b):
    return _sin3_derivative(x[..., 0], a) * _sin3_derivative(x[..., 1], b)


def example1(validate: bool = True) -> ManufacturedProblem:
    """u = (3 pi sin^2(pi y) cos(pi y) sin^3(pi x), -3 pi sin^2(pi x) cos(pi x) sin^3(pi y))
    on (0,1)^2, the rotated gradient of psi = sin^3(pi x) sin^3(pi y)."""

    def u(x):
        return np.stack([_psi(x, 0, 1), -_psi(x, 1, 0)], axis=-1)

    def curl_u(x):
        return -(_psi(x, 2, 0) + _psi(x, 0, 2))[..., None]

    def curl2_u(x):
        return np.stack([-_psi(x, 2, 1) - _psi(x, 0, 3), _psi(x, 3, 0) + _psi(x, 1, 2)], axis=-1)

    def curl3_u(x):
        return (_psi(x, 4, 0) + 2 * _psi(x, 2, 2) + _psi(x, 0, 4))[..., None]

    def div_u(x):
        return (_psi(x, 1, 1) - _psi(x, 1, 1))[..., None]

    def f(x):
        return np.stack([_psi(x, 4, 1) + 2 * _psi(x, 2, 3) + _psi(x, 0, 5),
                         -(_psi(x, 5, 0) + 2 * _psi(x, 3, 2) + _psi(x, 1, 4))], axis=-1)

    prob = ManufacturedProblem("example1", 2, u, curl_u, curl2_u, curl3_u, div_u, f)
    if validate:
        prob.validate()
    return prob


# --- Example 2: 3D ------------------------------------------------------------

def example2(validate: bool = True) -> ManufacturedProblem:
    """u = (sin(pi y) sin(pi z), sin(pi z) sin(pi x), sin(pi x) sin(pi y)) on (0,1)^3.
    curl curl u = -Laplace u = 2 pi^2 u, hence f = 4 pi^4 u."""

    def u(x):
        s = np.sin(PI * x)
        return np.stack([s[..., 1] * s[..., 2], s[..., 2] * s[..., 0], s[..., 0] * s[..., 1]], axis=-1)

    def curl_u(x):
        s, c = np.sin(PI * x), np.cos(PI * x)
        return PI * np.stack([s[..., 0] * (c[..., 1] - c[..., 2]),
                              s[..., 1] * (c[..., 2] - c[..., 0]),
                              s[..., 2] * (c[..., 0] - c[..., 1])], axis=-1)

    def curl2_u(x):
        return 2 * PI**2 * u(x)

    def curl3_u(x):
        return 2 * PI**2 * curl_u(x)

    def div_u(x):
        return np.zeros(np.shape(x)[:-1] + (1,))

    def f(x):
        return 4 * PI**4 * u(x)

    prob = ManufacturedProblem("example2", 3, u, curl_u, curl2_u, curl3_u, div_u, f)
    if validate:
        prob.validate()
    return prob


# --- divergence-free polynomial solutions ------------------------------------

def polynomial_problem(dim: int, order: int, seed: int = 0) -> ManufacturedProblem:
    """Random divergence-free polynomial of degree ``order``: the curl of a
    random polynomial potential of degree ``order + 1``."""
    rng = np.random.default_rng(seed)
    ncomp = 1 if dim == 2 else 3
    potential = ScaledPolynomial(dim, order + 1,
                                 rng.uniform(-1, 1, size=(ncomp, n_monomials(dim, order + 1))))
    u = curl(potential)
    c1 = curl(u)
    c2 = curl(c1)
    c3 = curl(c2)
    c4 = curl(c3)
    dv = div(u)
    return ManufacturedProblem(f"polynomial{dim}d_m{order}", dim, u.evaluate, c1.evaluate,
                               c2.evaluate, c3.evaluate, dv.evaluate, c4.evaluate)


EXAMPLES = {1: example1, 2: example2}
