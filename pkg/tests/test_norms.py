import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadcurl.fields import Difference, ZeroField, polynomial_field
from quadcurl.mesh import build_structured_mesh
from quadcurl.norms import (compute_eoc, dg_norm, dg_norm_squared_terms, energy_norm,
                            l2_error, l2_norm, p_norm)
from quadcurl.polynomials import ScaledPolynomial
from quadcurl.problems import example1
from quadcurl.reconstruction import ReconstructedSpace


def linear_field(dim, matrix):
    terms = []
    for row in matrix:
        terms.append({tuple(int(i == j) for i in range(dim)): c for j, c in enumerate(row) if c})
    return polynomial_field(ScaledPolynomial.from_terms(dim, 1, terms))


@pytest.fixture(scope="module")
def space():
    return ReconstructedSpace(build_structured_mesh(2, 4), 2)


def test_rotation_field():
    # continuous, divergence free, curl^2 = 0: interior terms vanish, the
    # boundary traces give h^-3 * 2 + h^-1 * 16 with h_e = 1/n
    n = 4
    mesh = build_structured_mesh(2, n)
    rot = linear_field(2, [[0, -1], [1, 0]])
    terms = dg_norm_squared_terms(rot, mesh, 4)
    assert terms["curl2"] == 0 and terms["div"] == 0 and terms["nv"] == 0
    assert dg_norm(rot, mesh, 4) == pytest.approx(math.sqrt(2 * n**3 + 16 * n), rel=1e-12)
    interior = ReconstructedSpace(mesh, 1, 6).interpolate(rot.functions["value"])
    t = dg_norm_squared_terms(Difference(interior, rot), mesh, 4)
    assert max(t.values()) <= 1e-24


@pytest.mark.parametrize("dim,n,expected", [(2, 4, 4 + 4 / 3 * 4**3),
                                            (3, 2, 9 + math.sqrt(2) * 2**3)])
def test_identity_field(dim, n, expected):
    mesh = build_structured_mesh(dim, n)
    ident = linear_field(dim, np.eye(dim))
    terms = dg_norm_squared_terms(ident, mesh, 4)
    assert terms["div"] == pytest.approx(dim**2, rel=1e-12)
    assert terms["curl2"] == 0 and terms["cxn"] == 0 and terms["nv"] == 0
    assert dg_norm(ident, mesh, 4) ** 2 == pytest.approx(expected, rel=1e-12)


def test_zero_fields(space):
    mesh = space.mesh
    assert p_norm(np.zeros(mesh.n_elements), mesh) == 0
    assert dg_norm(ZeroField(2), mesh, 4) == 0
    u = example1(validate=False).exact_field()
    assert l2_error(u, u, mesh, 8) == 0
    assert l2_norm(u, mesh, 8) > 0


def test_dg_definite_and_energy_dominates(space):
    rng = np.random.default_rng(0)
    mesh = space.mesh
    assert dg_norm(space.reconstruct(np.zeros(space.n_dofs)), mesh, 8) == 0
    for _ in range(10):
        v = space.reconstruct(rng.normal(size=space.n_dofs))
        dg = dg_norm(v, mesh, 8)
        assert dg > 0
        assert dg <= energy_norm(v, mesh, 8)


def test_triangle_inequality_and_homogeneity(space):
    mesh = space.mesh

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
    def check(seed, a):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(2, space.n_dofs))
        u, v, w = space.reconstruct(x), space.reconstruct(y), space.reconstruct(x + y)
        for norm in (dg_norm, energy_norm, l2_norm):
            nu, nv, nw = norm(u, mesh, 8), norm(v, mesh, 8), norm(w, mesh, 8)
            assert nw <= nu + nv + 1e-10 * (nu + nv)
            assert norm(space.reconstruct(a * x), mesh, 8) == pytest.approx(abs(a) * nu, rel=1e-10, abs=1e-12)
        p = rng.normal(size=mesh.n_elements)
        assert p_norm(a * p, mesh) == pytest.approx(abs(a) * p_norm(p, mesh), rel=1e-10, abs=1e-12)

    check()


def _equivalence_constant(n, samples=100):
    space = ReconstructedSpace(build_structured_mesh(2, n), 2)
    rng = np.random.default_rng(n)
    ratios = []
    for _ in range(samples):
        v = space.reconstruct(rng.normal(size=space.n_dofs))
        ratios.append(energy_norm(v, space.mesh, 8) / dg_norm(v, space.mesh, 8))
    return max(ratios)


def test_norm_equivalence_constant_is_stable():
    k4, k8 = _equivalence_constant(4), _equivalence_constant(8)
    assert 1 <= k4 < np.inf and 1 <= k8 < np.inf
    assert 0.5 <= k8 / k4 <= 2


def test_eoc_examples():
    assert compute_eoc(0.4, 0.1) == pytest.approx(2.0)
    assert compute_eoc(0.4, 0.2) == pytest.approx(1.0)
    assert compute_eoc(1.0, 1 / 27, ratio=3) == pytest.approx(3.0)
    assert math.isnan(compute_eoc(0.0, 0.1))
    assert math.isnan(compute_eoc(0.1, -1.0))
    assert math.isnan(compute_eoc(float("inf"), 0.1))
