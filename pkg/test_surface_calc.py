"""
HSIEM Surface Calculus Test Suite

Features tested:
- Space dimensions and monomial ordering
- Surface differential operators and the two surface sequences
- Triangle quadrature exactness
"""

from math import factorial

import numpy as np
import pytest

from hsiem.surface.surface_calc import (
    SpaceKind, SurfaceDegreeError, SurfaceOp, TrianglePolySpace, evaluate_basis,
    matrix_rank, monomial_exponents, nullity, rotation_matrix, space_dim, surf_operator,
    triangle_quadrature,
)


def test_space_dim_examples():
    assert space_dim(3, SpaceKind.SCALAR_H1) == 10
    assert space_dim(3, SpaceKind.VECTOR_HCURL) == 12
    assert space_dim(1, SpaceKind.SCALAR_L2) == 0
    assert space_dim(0, SpaceKind.VECTOR_HCURL) == 0


@pytest.mark.parametrize("p", range(0, 9))
def test_space_dim_formulas(p):
    assert space_dim(p, SpaceKind.SCALAR_H1) == (p + 1) * (p + 2) // 2
    assert space_dim(p, SpaceKind.VECTOR_HCURL) == (p + 1) * p
    assert space_dim(p, SpaceKind.SCALAR_L2) == p * (p - 1) // 2
    assert TrianglePolySpace(p, SpaceKind.SCALAR_H1).dim == len(monomial_exponents(p))


def test_degree_range():
    with pytest.raises(SurfaceDegreeError):
        space_dim(9, SpaceKind.SCALAR_H1)
    with pytest.raises(SurfaceDegreeError):
        TrianglePolySpace(-1, SpaceKind.SCALAR_H1)


def test_graded_lex_order():
    assert monomial_exponents(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert monomial_exponents(-1) == []


def test_grad_examples():
    grad = surf_operator(SurfaceOp.GRAD, 2)
    assert grad.shape == (6, 6)
    np.testing.assert_allclose(grad[:, 0], 0)
    # x -> (1, 0)
    expected = np.zeros(6)
    expected[0] = 1
    np.testing.assert_allclose(grad[:, 1], expected)


def test_operator_shapes():
    p = 4
    assert surf_operator(SurfaceOp.GRAD, p).shape == (space_dim(p, SpaceKind.VECTOR_HCURL),
                                                      space_dim(p, SpaceKind.SCALAR_H1))
    assert surf_operator(SurfaceOp.DIV, p).shape == (space_dim(p, SpaceKind.SCALAR_L2),
                                                     space_dim(p, SpaceKind.VECTOR_HCURL))
    assert surf_operator(SurfaceOp.SCALAR_CURL, 1).shape == (0, 2)
    assert surf_operator(SurfaceOp.GRAD, 0).shape == (0, 1)


@pytest.mark.parametrize("p", range(1, 7))
def test_surface_sequences_are_exact(p):
    grad = surf_operator(SurfaceOp.GRAD, p)
    perp = surf_operator(SurfaceOp.PERP_GRAD, p)
    curl = surf_operator(SurfaceOp.SCALAR_CURL, p)
    div = surf_operator(SurfaceOp.DIV, p)
    rot = rotation_matrix(p)

    assert np.abs(curl @ grad).max(initial=0) == 0
    assert np.abs(div @ perp).max(initial=0) == 0
    np.testing.assert_allclose(perp, rot @ grad)
    np.testing.assert_allclose(div @ rot, -curl)

    assert matrix_rank(grad) == space_dim(p, SpaceKind.SCALAR_H1) - 1
    assert matrix_rank(grad) == nullity(curl)
    assert matrix_rank(perp) == nullity(div)
    assert matrix_rank(curl) == space_dim(p, SpaceKind.SCALAR_L2)
    assert matrix_rank(div) == space_dim(p, SpaceKind.SCALAR_L2)


def test_evaluate_basis():
    points = np.array([[0.5, 0.25], [0.1, 0.2]])
    scalar = evaluate_basis(2, SpaceKind.SCALAR_H1, points)
    assert scalar.shape == (6, 2)
    np.testing.assert_allclose(scalar[4], [0.125, 0.02])
    vector = evaluate_basis(2, SpaceKind.VECTOR_HCURL, points)
    assert vector.shape == (6, 2, 2)
    np.testing.assert_allclose(vector[4, 1], [0.5, 0.1])
    np.testing.assert_allclose(vector[4, 0], 0)


def test_quadrature_examples():
    rule = triangle_quadrature(4)
    x, y = rule.nodes[:, 0], rule.nodes[:, 1]
    assert rule.integrate(np.ones_like(x)) == pytest.approx(0.5, abs=1e-15)
    assert rule.integrate(x) == pytest.approx(1 / 6, abs=1e-15)
    assert rule.integrate(x ** 2 * y) == pytest.approx(1 / 60, abs=1e-15)
    assert np.all(rule.weights > 0)
    with pytest.raises(ValueError):
        triangle_quadrature(-1)


@pytest.mark.parametrize("degree", range(0, 13))
def test_quadrature_exactness(degree):
    rule = triangle_quadrature(degree)
    x, y = rule.nodes[:, 0], rule.nodes[:, 1]
    for i, j in monomial_exponents(degree):
        exact = factorial(i) * factorial(j) / factorial(i + j + 2)
        assert rule.integrate(x ** i * y ** j) == pytest.approx(exact, abs=1e-14)
