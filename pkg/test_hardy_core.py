"""
HSIEM Hardy Core Test Suite

Features tested:
- Moebius map and its pole
- T+ / T- coupling operators and the inverse of T-
- Truncated D and I matrices
- Bilinear form B against the contour quadrature
- Radial bases, transformed derivative and radial form matrices
- Inverse transform of coefficient vectors
"""

import numpy as np
import pytest
from scipy.integrate import quad

from hsiem.hardy.hardy_core import (
    HardyCoefficients, MoebiusParams, NotInImageError, PoleError, RadialFamily,
    RadialOperatorMatrix, BasisTag, TSign, apply_d, apply_t, bilinear_b,
    contour_bilinear_b, d_matrix, d_xi, i_matrix, invert_t_minus, inverse_transform,
    mobius_s, radial_bases, radial_form_matrix,
)


# =================================================================
# MOEBIUS MAP
# =================================================================

def test_mobius_examples():
    assert mobius_s(MoebiusParams(1), -1) == 0
    assert mobius_s(MoebiusParams(1), 0) == pytest.approx(-1j)
    assert mobius_s(MoebiusParams(2), 1j) == pytest.approx(2)


def test_mobius_pole():
    with pytest.raises(PoleError):
        mobius_s(MoebiusParams(1), 1)


@pytest.mark.parametrize("kappa0", [0, -1 + 1j, 1j])
def test_params_require_positive_real_part(kappa0):
    with pytest.raises(ValueError):
        MoebiusParams(kappa0)


def test_coefficients_are_immutable():
    c = HardyCoefficients([1, 2, 3])
    with pytest.raises(ValueError):
        c.coeffs[0] = 5
    with pytest.raises(ValueError):
        HardyCoefficients([])


def test_boundary_form_to_monomial():
    params = MoebiusParams(2 + 1j)
    psi_minus_one = HardyCoefficients([0.0], boundary=1.0).to_monomial(params)
    np.testing.assert_allclose(psi_minus_one.coeffs[0], 1 / (2j * params.kappa0))
    assert np.allclose(psi_minus_one.coeffs[1:], 0)


# =================================================================
# COUPLING OPERATORS
# =================================================================

def test_apply_t_examples():
    np.testing.assert_allclose(apply_t(TSign.MINUS, 1, [0]).coeffs, [0.5, 0])
    np.testing.assert_allclose(apply_t(TSign.PLUS, 0, [0, 0, 1]).coeffs, [0, 0, 0.5, 0.5])
    np.testing.assert_allclose(apply_t(TSign.MINUS, 0, [1]).coeffs, [-0.5, 0.5])


def test_invert_t_minus_examples():
    u0, hat = invert_t_minus([0.5, 0])
    assert u0 == pytest.approx(1)
    assert np.allclose(hat.coeffs, 0)

    u0, hat = invert_t_minus([-0.5, 0.5])
    assert u0 == pytest.approx(0)
    np.testing.assert_allclose(hat.coeffs, [1])

    u0, hat = invert_t_minus([1.0])
    assert u0 == pytest.approx(2)
    np.testing.assert_allclose(apply_t(TSign.MINUS, u0, hat).coeffs[:1], [1.0])


def test_invert_t_minus_recovers_preimage(rng):
    for n in range(0, 12):
        u0 = complex(rng.normal(), rng.normal())
        hat = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        image = apply_t(TSign.MINUS, u0, hat)
        back_u0, back_hat = invert_t_minus(image)
        assert abs(back_u0 - u0) < 1e-13 * max(1, abs(u0))
        np.testing.assert_allclose(back_hat.coeffs, hat, atol=1e-13 * np.max(np.abs(hat)) * (n + 2))


def test_invert_t_minus_outside_image():
    with pytest.raises(NotInImageError):
        invert_t_minus([0.0, 0.0, 1.0], degree=0)


# =================================================================
# RADIAL OPERATORS
# =================================================================

def test_d_matrix_entries():
    params = MoebiusParams(2 + 1j)
    a = 2j * params.kappa0
    d = d_matrix(4, params).entries
    assert d.shape == (5, 5)
    assert d[0, 0] == pytest.approx(1 - 1 / a)
    assert d[1, 0] == pytest.approx(1 / a)
    assert d[2, 1] == pytest.approx(2 / a)
    np.testing.assert_allclose(d, d.T)


@pytest.mark.parametrize("kappa0", [1, 2 + 1j, 5 - 1j])
def test_i_matrix_inverts_d(kappa0):
    params = MoebiusParams(kappa0)
    for n in (0, 5, 30):
        d = d_matrix(n, params).entries
        inv = i_matrix(n, params).entries
        scale = np.linalg.norm(d, np.inf) * max(1.0, np.linalg.norm(inv, np.inf))
        np.testing.assert_allclose(d @ inv, np.eye(n + 1), atol=1e-13 * scale)
        np.testing.assert_allclose(inv, inv.T, atol=1e-13 * scale)


def test_i_matrix_scalar():
    params = MoebiusParams(2 + 1j)
    assert i_matrix(0, params).entries[0, 0] == pytest.approx(1 / (1 - 1 / (2j * params.kappa0)))


def test_apply_d_matches_analytic_action(rng):
    params = MoebiusParams(1.5 - 0.5j)
    a = 2j * params.kappa0
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    # (z-1)^2/(2 i kappa0) U' + (1 + (z-1)/(2 i kappa0)) U
    p = np.polynomial.Polynomial(c)
    z_minus_one = np.polynomial.Polynomial([-1, 1])
    expected = (z_minus_one ** 2 * p.deriv() / a + (1 + z_minus_one / a) * p).coef
    result = apply_d(c, params).coeffs
    np.testing.assert_allclose(result, expected, atol=1e-13)


def test_apply_d_negative_power_without_padding_is_i_matrix(rng):
    params = MoebiusParams(2 + 1j)
    c = rng.normal(size=5) + 0j
    result = apply_d(c, params, power=-1, padding=0).coeffs
    np.testing.assert_allclose(result, i_matrix(4, params).entries @ c, atol=1e-13)


def test_radial_operator_matrix_shape_check():
    with pytest.raises(ValueError):
        RadialOperatorMatrix(np.eye(3), BasisTag.MONOMIAL, 1.0, 4)


# =================================================================
# BILINEAR FORM
# =================================================================

def test_bilinear_b_examples():
    params = MoebiusParams(2 + 1j)
    assert bilinear_b([1], [1], params) == pytest.approx(-2j * params.kappa0)
    assert bilinear_b([1], [0, 1], params) == 0
    u = np.array([1, 2 - 1j, 0.5])
    v = np.array([0.3, -1, 2j])
    assert bilinear_b(1j * u, v, params) == pytest.approx(1j * bilinear_b(u, v, params))


def test_bilinear_b_matches_contour_quadrature(rng):
    params = MoebiusParams(1 + 0.5j)
    for n in range(0, 21):
        u = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        exact = bilinear_b(u, v, params)
        oracle = contour_bilinear_b(u, v, params, nodes=4 * (n + 2))
        assert abs(exact - oracle) <= 1e-12 * max(1.0, abs(exact))


def test_d_symmetry_under_b(rng):
    params = MoebiusParams(3 - 1j)
    d = d_matrix(8, params).entries
    u = rng.normal(size=9) + 1j * rng.normal(size=9)
    v = rng.normal(size=9) + 1j * rng.normal(size=9)
    assert bilinear_b(d @ u, v, params) == pytest.approx(bilinear_b(u, d @ v, params), rel=1e-12)


def test_bilinear_b_is_exterior_integral():
    # e_0 corresponds to 2 i kappa0 exp(i kappa0 xi)
    params = MoebiusParams(1 + 1j)
    u = inverse_transform([1.0], params)
    re = quad(lambda t: (u(t) ** 2).real, 0, np.inf)[0]
    im = quad(lambda t: (u(t) ** 2).imag, 0, np.inf)[0]
    assert complex(re, im) == pytest.approx(bilinear_b([1], [1], params), rel=1e-8)


# =================================================================
# RADIAL BASES AND FORM MATRICES
# =================================================================

def test_radial_bases():
    params = MoebiusParams(2 + 1j)
    big, small = radial_bases(4, params)
    assert len(big) == len(small) == 6
    np.testing.assert_allclose(big[0].coeffs[:1], [1 / (2j * params.kappa0)])
    np.testing.assert_allclose(small[3].coeffs, [0, 0, 0.5, 0.5, 0, 0])


def test_psi_prime_is_transformed_derivative():
    params = MoebiusParams(2 - 1j)
    big, small = radial_bases(5, params)
    for trace_fn, derivative in zip(big, small):
        np.testing.assert_allclose(d_xi(trace_fn, params).padded(7)[:7],
                                   derivative.padded(7)[:7], atol=1e-14)


def test_radial_form_matrix_examples():
    params = MoebiusParams(2 + 1j)
    k0 = params.kappa0
    big = radial_form_matrix(4, params, RadialFamily.PSI).entries
    assert big[0, 0] == pytest.approx(1j / (2 * k0))

    small = radial_form_matrix(4, params, RadialFamily.PSI_PRIME).entries
    for j in range(5):
        for k in range(5):
            expected = -(1j * k0 / 2) * (2 * (j == k) + (abs(j - k) == 1))
            assert small[j + 1, k + 1] == pytest.approx(expected)
    assert small[0, 2] == 0
    assert small[0, 1] != 0


def test_radial_form_matrix_against_explicit_derivative():
    params = MoebiusParams(1 + 2j)
    big, _ = radial_bases(6, params)
    derivatives = [d_xi(f, params) for f in big]
    expected = np.array([[bilinear_b(a, b, params) for b in derivatives] for a in derivatives])
    result = radial_form_matrix(6, params, RadialFamily.PSI_PRIME).entries
    np.testing.assert_allclose(result, expected, atol=1e-12 * np.max(np.abs(expected)))


@pytest.mark.parametrize("powers", [(0, 0), (1, 1), (2, 2), (1, 0), (-1, -1), (-2, 0)])
def test_radial_form_matrices_are_symmetric(powers):
    params = MoebiusParams(3 + 1j)
    a, b = powers
    m = radial_form_matrix(5, params, RadialFamily.PSI, a, a).entries
    np.testing.assert_allclose(m, m.T, atol=1e-13 * np.max(np.abs(m)))
    left = radial_form_matrix(5, params, RadialFamily.PSI, a, b).entries
    right = radial_form_matrix(5, params, RadialFamily.PSI, b, a).entries
    np.testing.assert_allclose(left, right.T, atol=1e-13 * np.max(np.abs(left)))


def test_radial_form_matrix_power_range():
    with pytest.raises(ValueError):
        radial_form_matrix(3, MoebiusParams(1), RadialFamily.PSI, 3, 0)


def test_mass_form_matches_exterior_integral():
    # B(D Psi_0, D Psi_0) = int (1+xi)^2 Psi_0(xi)^2 dxi
    params = MoebiusParams(1 + 1j)
    big, _ = radial_bases(2, params)
    u = inverse_transform(big[1], params)
    integrand = lambda t: (1 + t) ** 2 * u(t) ** 2
    re = quad(lambda t: integrand(t).real, 0, np.inf, limit=200)[0]
    im = quad(lambda t: integrand(t).imag, 0, np.inf, limit=200)[0]
    entry = radial_form_matrix(2, params, RadialFamily.PSI, 1, 1).entries[1, 1]
    assert entry == pytest.approx(complex(re, im), rel=1e-7)


def test_inverse_transform_of_constant():
    params = MoebiusParams(2 + 1j)
    u = inverse_transform([1.0], params)
    xi = np.linspace(0, 3, 7)
    np.testing.assert_allclose(u(xi), 2j * params.kappa0 * np.exp(1j * params.kappa0 * xi))
