"""
HSIEM Dense Linear Algebra Test Suite

Features tested:
- LU solves, singular pivots and condition warnings
- Shift-invert Arnoldi on diagonal, 2x2 and random complex-symmetric pencils
- Scaling invariance and left residuals
- Spectrum records and square-root branch
"""

import numpy as np
import pytest
from scipy.linalg import hilbert

from hsiem.linalg.dense_eig import (
    IllConditionedWarning, ShiftOnEigenvalueError, SingularMatrixError, Spectrum,
    kappa_from_square, lu_solve, quality_factor, shift_invert_eig,
)


def _random_pencil(n, seed=7):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    S = a + a.T
    M = b @ b.T / n + 4 * np.eye(n)
    return S, M


# =================================================================
# LU
# =================================================================

def test_lu_identity():
    b = np.array([1 + 2j, -3, 0.5j])
    np.testing.assert_allclose(lu_solve(np.eye(3), b), b)


def test_lu_two_by_two():
    A = np.array([[1, 1j], [1j, 1]])
    x = lu_solve(A, np.array([1 + 1j, 1 + 1j]))
    np.testing.assert_allclose(x, [1, 1], atol=1e-15)


def test_lu_residual(rng):
    A = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    b = rng.normal(size=(40, 3)) + 0j
    x = lu_solve(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(A) * np.linalg.norm(x)


def test_lu_singular():
    with pytest.raises(SingularMatrixError) as info:
        lu_solve(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))
    assert info.value.pivot == 1


def test_lu_ill_conditioned_warns():
    with pytest.warns(IllConditionedWarning):
        lu_solve(hilbert(8), np.ones(8))


def test_lu_shape_checks():
    with pytest.raises(ValueError):
        lu_solve(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        lu_solve(np.eye(2), np.ones(3))


# =================================================================
# EIGENSOLVER
# =================================================================

def test_diagonal_pencil():
    S = np.diag([1.0, 4.0, 9.0])
    spectrum = shift_invert_eig(S, np.eye(3), 6.0, 2)
    np.testing.assert_allclose(spectrum.kappa_sq, [4, 9], atol=1e-13)
    np.testing.assert_allclose(spectrum.kappa, [2, 3], atol=1e-13)
    assert spectrum.converged.all()


def test_nearest_to_shift():
    S = np.diag([1.0, 4.0, 9.0])
    spectrum = shift_invert_eig(S, np.eye(3), 3.5, 2)
    np.testing.assert_allclose(spectrum.kappa_sq, [4, 1], atol=1e-13)


def test_two_by_two():
    S = np.array([[2.0, 1.0], [1.0, 2.0]])
    spectrum = shift_invert_eig(S, np.eye(2), 0.5, 1)
    assert spectrum.kappa_sq[0] == pytest.approx(1, abs=1e-13)


def test_shift_on_eigenvalue():
    with pytest.raises(ShiftOnEigenvalueError):
        shift_invert_eig(np.diag([1.0, 4.0, 9.0]), np.eye(3), 4.0, 1)


def test_random_complex_symmetric_pencil():
    S, M = _random_pencil(50)
    spectrum = shift_invert_eig(S, M, 0.3 + 0.1j, 6, tol=1e-10)
    assert len(spectrum) == 6
    assert np.all(spectrum.residuals <= 1e-10)
    for lam, x in zip(spectrum.kappa_sq, spectrum.vectors.T):
        # unconjugated transpose as left eigenvector
        left = x @ S - lam * (x @ M)
        scale = (np.linalg.norm(S, 1) + abs(lam) * np.linalg.norm(M, 1)) * np.linalg.norm(x)
        assert np.linalg.norm(left) / scale <= 1e-10
    reference = np.linalg.eigvals(np.linalg.solve(M, S))
    nearest = reference[np.argsort(np.abs(reference - (0.3 + 0.1j)))[:6]]
    np.testing.assert_allclose(np.sort_complex(spectrum.kappa_sq), np.sort_complex(nearest),
                               rtol=1e-8)


def test_restarted_run_on_larger_pencil():
    S, M = _random_pencil(200, seed=3)
    spectrum = shift_invert_eig(S, M, 1.0, 4, tol=1e-8)
    assert spectrum.converged.all()
    assert np.all(spectrum.residuals <= 1e-8)


def test_scaling_invariance():
    S, M = _random_pencil(30)
    base = shift_invert_eig(S, M, 0.2, 3)
    scaled = shift_invert_eig(5.0 * S, 5.0 * M, 0.2, 3)
    np.testing.assert_allclose(scaled.kappa_sq, base.kappa_sq, rtol=1e-10)


def test_deterministic_start_vector():
    S, M = _random_pencil(30)
    a = shift_invert_eig(S, M, 0.2, 3)
    b = shift_invert_eig(S, M, 0.2, 3)
    np.testing.assert_array_equal(a.kappa_sq, b.kappa_sq)


def test_request_size():
    with pytest.raises(ValueError):
        shift_invert_eig(np.eye(3), np.eye(3), 0.5, 4)


# =================================================================
# SPECTRUM RECORDS
# =================================================================

def test_kappa_branch():
    kappa = kappa_from_square(np.array([4.0, -4.0, 3 - 4j]))
    assert kappa[0] == pytest.approx(2)
    assert kappa[1] == pytest.approx(-2j)
    assert kappa[2] == pytest.approx(2 - 1j)


def test_quality_factor():
    q = quality_factor(np.array([3 - 1j, 2.0]))
    assert q[0] == pytest.approx(3)
    assert np.isinf(q[1])


def test_spectrum_select_and_export():
    spectrum = shift_invert_eig(np.diag([1.0, 4.0, 9.0]), np.eye(3), 6.0, 3)
    kept = spectrum.select(np.array([True, False, True]))
    assert len(kept) == 2
    assert kept.filtered == 1
    frame = kept.with_multiplicity(5).to_frame()
    assert list(frame["multiplicity"]) == [5, 5]
    payload = kept.to_dict()
    assert payload["eigenvalues"][0]["kappa"]["re"] == pytest.approx(2.0)
    assert payload["eigenvalues"][1]["kappa"]["re"] == pytest.approx(1.0)
    assert payload["filtered"] == 1
