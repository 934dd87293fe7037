import itertools
import math

import numpy as np
import pytest

from quadcurl.mesh import build_structured_mesh
from quadcurl.quadrature import (MAX_DEGREE, cell_quadrature, face_quadrature, get_rule,
                                 monomial_integral, reference_measure)


def exponents_upto(dim, degree):
    for alpha in itertools.product(range(degree + 1), repeat=dim):
        if sum(alpha) <= degree:
            yield alpha


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("degree", range(1, 13))
def test_monomial_exactness(dim, degree):
    rule = get_rule(dim, degree)
    assert rule.exact_degree >= degree
    assert abs(rule.weights.sum() - reference_measure(dim)) <= 1e-14
    for alpha in exponents_upto(dim, degree):
        approx = np.sum(rule.weights * np.prod(rule.points ** np.array(alpha), axis=1))
        assert abs(approx - monomial_integral(alpha)) <= 1e-12, alpha


def test_highest_degree_rule_is_exact():
    rule = get_rule(3, MAX_DEGREE)
    for alpha in [(MAX_DEGREE, 0, 0), (7, 7, 6), (0, 10, 10)]:
        approx = np.sum(rule.weights * np.prod(rule.points ** np.array(alpha), axis=1))
        assert approx == pytest.approx(monomial_integral(alpha), rel=1e-10, abs=1e-14)


def test_rules_lie_inside_reference_simplex():
    for dim in (1, 2, 3):
        rule = get_rule(dim, 9)
        assert np.all(rule.points >= 0) and np.all(rule.points.sum(axis=1) <= 1)
        assert np.all(rule.weights > 0)


def test_centroid_rule_2d():
    rule = get_rule(2, 1)
    assert rule.points.shape == (1, 2)
    np.testing.assert_allclose(rule.weights, [0.5])
    np.testing.assert_allclose(rule.points[0], [1 / 3, 1 / 3])


def test_two_point_gauss_1d():
    rule = get_rule(1, 3)
    np.testing.assert_allclose(rule.weights, [0.5, 0.5])
    np.testing.assert_allclose(np.sort(rule.points[:, 0]), 0.5 + np.array([-1, 1]) / (2 * math.sqrt(3)))


def test_tet_degree2_values():
    rule = get_rule(3, 2)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.sum(rule.weights * x**2) == pytest.approx(1 / 60, abs=1e-15)
    assert np.sum(rule.weights * x * y) == pytest.approx(1 / 120, abs=1e-15)


@pytest.mark.parametrize("degree", [0, MAX_DEGREE + 1])
def test_degree_out_of_range(degree):
    with pytest.raises(ValueError, match="out of range"):
        get_rule(2, degree)


@pytest.mark.parametrize("dim,n", [(2, 3), (3, 2)])
def test_mapped_rules_integrate_polynomials(dim, n):
    mesh = build_structured_mesh(dim, n)
    cq = cell_quadrature(mesh, 4)
    x = cq.points
    # int_(0,1)^d x^2 y^2 = 1/9
    assert np.sum(cq.weights * x[..., 0] ** 2 * x[..., 1] ** 2) == pytest.approx(1 / 9, rel=1e-13)
    fq = face_quadrature(mesh, 2)
    assert fq.weights[mesh.boundary].sum() == pytest.approx(2 * dim, rel=1e-13)
