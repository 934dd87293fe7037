import numpy as np
import pytest

from quadcurl.problems import (ManufacturedProblem, ManufacturedSolutionError, example1,
                               example2, fd_curl, polynomial_problem)


@pytest.fixture(scope="module")
def ex1():
    return example1()


@pytest.fixture(scope="module")
def ex2():
    return example2()


def test_example1_values(ex1):
    np.testing.assert_allclose(ex1.u(np.array([0.5, 0.5])), [0.0, 0.0], atol=1e-15)
    assert abs(ex1.div_u(np.array([0.3, 0.7]))[0]) <= 1e-12
    x = np.linspace(0, 1, 11)
    edge = np.stack([x, 0 * x], axis=1)
    normals = np.tile([0.0, -1.0], (11, 1))
    np.testing.assert_allclose(ex1.g1(edge, normals), 0.0, atol=1e-14)
    # first component as printed: 3 pi sin^2(pi y) cos(pi y) sin^3(pi x)
    pt = np.array([0.3, 0.2])
    expect = 3 * np.pi * np.sin(np.pi * 0.2) ** 2 * np.cos(np.pi * 0.2) * np.sin(np.pi * 0.3) ** 3
    assert ex1.u(pt)[0] == pytest.approx(expect, rel=1e-14)
    assert ex1.u(pt)[1] == pytest.approx(
        -3 * np.pi * np.sin(np.pi * 0.3) ** 2 * np.cos(np.pi * 0.3) * np.sin(np.pi * 0.2) ** 3, rel=1e-14)


def test_example2_values(ex2):
    np.testing.assert_allclose(ex2.u(np.array([0.5, 0.5, 0.5])), [1.0, 1.0, 1.0], atol=1e-15)
    pts = np.random.default_rng(0).uniform(size=(100, 3))
    assert np.abs(ex2.div_u(pts)).max() == 0
    np.testing.assert_allclose(ex2.f(pts), 4 * np.pi**4 * ex2.u(pts), rtol=1e-13)


@pytest.mark.parametrize("factory", [example1, example2])
def test_oracle_agreement(factory):
    report = factory(validate=False).validate(n_points=20, seed=3)
    assert report["div"] <= 1e-12
    assert all(report[f"curl{k}"] <= 1e-5 for k in range(1, 5))


def test_fd_curl_of_known_field():
    F = lambda x: np.stack([-x[..., 1], x[..., 0]], axis=-1)
    pts = np.random.default_rng(1).uniform(size=(5, 2))
    np.testing.assert_allclose(fd_curl(F, 2, 1e-2)(pts), 2.0, rtol=1e-12)


def test_wrong_right_hand_side_is_rejected(ex1):
    bad = ManufacturedProblem("bad", 2, ex1.u, ex1.curl_u, ex1.curl2_u, ex1.curl3_u, ex1.div_u,
                              lambda x: 1.001 * ex1.f(x))
    with pytest.raises(ManufacturedSolutionError, match="curl\\^4"):
        bad.validate()
    notdivfree = ManufacturedProblem("nd", 2, ex1.u, ex1.curl_u, ex1.curl2_u, ex1.curl3_u,
                                     lambda x: np.ones(x.shape[:-1] + (1,)), ex1.f)
    with pytest.raises(ManufacturedSolutionError, match="div"):
        notdivfree.validate()


@pytest.mark.parametrize("dim,order", [(2, 2), (2, 3), (3, 2)])
def test_polynomial_problem_is_consistent(dim, order):
    prob = polynomial_problem(dim, order, seed=2)
    report = prob.validate()
    assert report["div"] <= 1e-12
    pts = np.random.default_rng(2).uniform(size=(4, dim))
    assert np.all(prob.p(pts) == 0)
