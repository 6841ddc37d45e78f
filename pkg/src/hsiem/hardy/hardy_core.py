"""
HSIEM Hardy Space Core
Exact finite dimensional algebra on the Hardy space of the unit disk

Features:
- Moebius map between the unit disk and the transformed frequency plane
- Boundary coupling operators T+ / T- and the inverse of T-
- Radial multiplication operator D, its truncated inverse I
- Radial basis functions Psi_k (trace space) and psi_k (derivatives)
- Closed form bilinear form B and its contour quadrature counterpart
- Radial form matrices B(D^a Phi_j, D^b Phi_k)
- Inverse transform of a coefficient vector back to a function of xi

All coefficient vectors are in the monomial basis z^0, z^1, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial import polynomial as npoly
from scipy.linalg import lu_factor, lu_solve
from scipy.special import binom

from hsiem.utils.hsiem_utils import HSIEMError, get_settings

logger = structlog.get_logger(__name__)

CoeffLike = Union["HardyCoefficients", Sequence[complex], np.ndarray]


class PoleError(HSIEMError):
    """Raised when the Moebius map is evaluated at its pole z = 1"""
    pass


class NotInImageError(HSIEMError):
    """Raised when a polynomial is not a T- image within the truncation"""
    pass


class SingularOperatorError(HSIEMError):
    """Raised when a truncated radial operator cannot be inverted"""
    pass


class TSign(Enum):
    """Sign of the coupling operator T"""
    PLUS = "+"
    MINUS = "-"


class BasisTag(Enum):
    """Coordinates a radial matrix is expressed in"""
    MONOMIAL = "monomial"
    PSI_BASIS = "Psi"
    PSI_PRIME_BASIS = "psi"


class RadialFamily(Enum):
    """Radial basis families: trace space (Psi) and derivative space (psi)"""
    PSI = "Psi"
    PSI_PRIME = "psi"


@dataclass(frozen=True)
class MoebiusParams:
    """Parameter of the Moebius map s(z) = i kappa0 (z+1)/(z-1)"""
    kappa0: complex

    def __post_init__(self):
        kappa0 = complex(self.kappa0)
        if not (math.isfinite(kappa0.real) and math.isfinite(kappa0.imag)):
            raise ValueError(f"kappa0 must be finite, got {kappa0}")
        if kappa0.real <= 0:
            raise ValueError(f"kappa0 must have positive real part, got {kappa0}")
        object.__setattr__(self, "kappa0", kappa0)

    @property
    def two_i_kappa0(self) -> complex:
        return 2j * self.kappa0


@dataclass(frozen=True)
class HardyCoefficients:
    """
    Monomial coefficients c_0..c_M of a Hardy space function.

    With ``boundary`` set, the object stands for (1/(i kappa0)) T-(u0, sum c_j z^j).
    """
    coeffs: np.ndarray
    boundary: Optional[complex] = None

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex).ravel()
        if arr.size < 1:
            raise ValueError("HardyCoefficients needs at least one coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        if self.boundary is not None:
            object.__setattr__(self, "boundary", complex(self.boundary))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def to_monomial(self, params: MoebiusParams) -> "HardyCoefficients":
        """Collapse the boundary form to plain monomial coefficients"""
        if self.boundary is None:
            return self
        image = apply_t(TSign.MINUS, self.boundary, HardyCoefficients(self.coeffs))
        return HardyCoefficients(image.coeffs / (1j * params.kappa0))

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.coeffs.size), dtype=complex)
        out[:self.coeffs.size] = self.coeffs
        return out


@dataclass(frozen=True)
class RadialOperatorMatrix:
    """Dense matrix of a truncated radial operator or radial form"""
    entries: np.ndarray
    basis_tag: BasisTag
    kappa0: complex
    N: int

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"radial operator matrix must be square, got shape {entries.shape}")
        expected = self.N + 1 if self.basis_tag == BasisTag.MONOMIAL else self.N + 2
        if entries.shape[0] != expected:
            raise ValueError(
                f"{self.basis_tag.value} matrix for N={self.N} must be {expected}x{expected}, "
                f"got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def _as_array(value: CoeffLike, params: Optional[MoebiusParams] = None) -> np.ndarray:
    if isinstance(value, HardyCoefficients):
        if value.boundary is not None:
            if params is None:
                raise ValueError("boundary-carrying coefficients need MoebiusParams")
            value = value.to_monomial(params)
        return np.asarray(value.coeffs)
    return np.array(value, dtype=complex).ravel()


def _pad(a: np.ndarray, length: int) -> np.ndarray:
    if a.shape[-1] >= length:
        return a
    width = [(0, 0)] * (a.ndim - 1) + [(0, length - a.shape[-1])]
    return np.pad(a, width)


# =================================================================
# MOEBIUS MAP AND COUPLING OPERATORS
# =================================================================

def mobius_s(params: MoebiusParams, z: complex) -> complex:
    """s(z) = i kappa0 (z+1)/(z-1)"""
    z = complex(z)
    if abs(z - 1.0) <= 4.0 * np.finfo(float).eps:
        raise PoleError(f"z={z} hits the pole of the Moebius map")
    return 1j * params.kappa0 * (z + 1.0) / (z - 1.0)


def apply_t(sign: TSign, u0: complex, poly: CoeffLike) -> HardyCoefficients:
    """T+-(u0, U) = 1/2 (u0 + (z +- 1) U), degree grows by one"""
    c = _as_array(poly)
    out = np.zeros(c.size + 1, dtype=complex)
    out[1:] += c
    out[:-1] += c if sign == TSign.PLUS else -c
    out[0] += u0
    return HardyCoefficients(0.5 * out)


def invert_t_minus(poly: CoeffLike, tol: float = 1e-12,
                   degree: Optional[int] = None) -> Tuple[complex, HardyCoefficients]:
    """
    Preimage (u0, U) of a T- image with deg U <= degree.

    ``degree`` defaults to len(poly) - 2. Coefficients beyond degree + 1 must
    vanish; the reconstruction residual is checked against ``tol``.
    """
    a = _as_array(poly)
    n = a.size - 2 if degree is None else int(degree)
    if n < -1:
        raise ValueError(f"degree must be >= -1, got {n}")

    def coeff(j: int) -> complex:
        return a[j] if j < a.size else 0.0

    c = np.zeros(max(n + 1, 1), dtype=complex)
    if n >= 0:
        # back substitution from the leading coefficient
        c[n] = 2.0 * coeff(n + 1)
        for j in range(n, 0, -1):
            c[j - 1] = 2.0 * coeff(j) + c[j]
    u0 = 2.0 * coeff(0) + (c[0] if n >= 0 else 0.0)

    recon = apply_t(TSign.MINUS, u0, c).coeffs
    length = max(recon.size, a.size)
    residual = float(np.max(np.abs(_pad(recon, length) - _pad(a, length))))
    scale = max(1.0, float(np.max(np.abs(a))))
    if residual > tol * scale:
        raise NotInImageError(
            f"input is not in T-(C x Pi_{n}): residual {residual:.3e} exceeds {tol * scale:.3e}")
    return complex(u0), HardyCoefficients(c)


# =================================================================
# RADIAL OPERATORS
# =================================================================

def _d_entries(size: int, kappa0: complex) -> np.ndarray:
    """size x size leading block of the infinite tridiagonal D"""
    j = np.arange(size)
    band = np.diag(-(2.0 * j + 1.0)).astype(complex)
    off = np.arange(1, size, dtype=float)
    band += np.diag(off, 1) + np.diag(off, -1)
    return np.eye(size, dtype=complex) + band / (2j * kappa0)


def d_matrix(N: int, params: MoebiusParams) -> RadialOperatorMatrix:
    """(N+1)x(N+1) truncation of D = id + tridiag/(2 i kappa0)"""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    return RadialOperatorMatrix(_d_entries(N + 1, params.kappa0), BasisTag.MONOMIAL,
                                params.kappa0, N)


def i_matrix(N: int, params: MoebiusParams) -> RadialOperatorMatrix:
    """Exact inverse of the truncated D matrix"""
    d = d_matrix(N, params).entries
    cond = float(np.linalg.cond(d))
    if not math.isfinite(cond) or cond * np.finfo(float).eps > 1e-2:
        raise SingularOperatorError(
            f"truncated D (N={N}, kappa0={params.kappa0}) is singular, condition estimate {cond:.3e}")
    return RadialOperatorMatrix(np.linalg.inv(d), BasisTag.MONOMIAL, params.kappa0, N)


def _apply_power_rows(rows: np.ndarray, params: MoebiusParams, power: int,
                      padding: int) -> np.ndarray:
    """Apply D^power (power >= 0) or I^|power| to every row of ``rows``"""
    out = np.array(rows, dtype=complex, ndmin=2)
    if power >= 0:
        for _ in range(power):
            length = out.shape[1]
            # exact action: column j of D only touches rows j-1..j+1
            d_rect = _d_entries(length + 1, params.kappa0)[:, :length]
            out = out @ d_rect.T
        return out
    size = out.shape[1] + padding
    d = _d_entries(size, params.kappa0)
    try:
        factor = lu_factor(d, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularOperatorError(f"padded D of size {size} could not be factorized: {exc}")
    out = _pad(out, size).T
    for _ in range(-power):
        out = lu_solve(factor, out)
    return out.T


def apply_d(poly: CoeffLike, params: MoebiusParams, power: int = 1,
            padding: Optional[int] = None) -> HardyCoefficients:
    """
    Apply D^power to a coefficient vector.

    Positive powers act exactly (degree grows by ``power``). Negative powers
    apply I on a truncation enlarged by ``padding`` modes; padding 0 gives I_N.
    """
    if padding is None:
        padding = get_settings().inverse_padding
    rows = _apply_power_rows(_as_array(poly, params)[None, :], params, power, padding)
    return HardyCoefficients(rows[0])


def d_xi(poly: CoeffLike, params: MoebiusParams) -> HardyCoefficients:
    """Transformed radial derivative i kappa0 T+ T-^{-1}"""
    c = _as_array(poly, params)
    u0, hat = invert_t_minus(1j * params.kappa0 * c)
    return apply_t(TSign.PLUS, u0, hat)


# =================================================================
# BILINEAR FORM
# =================================================================

def bilinear_b(U: CoeffLike, V: CoeffLike, params: MoebiusParams) -> complex:
    """B(U, V) = -2 i kappa0 sum_j u_j v_j (no conjugation)"""
    u = _as_array(U, params)
    v = _as_array(V, params)
    n = min(u.size, v.size)
    return complex(-2j * params.kappa0 * np.dot(u[:n], v[:n]))


def contour_bilinear_b(U: CoeffLike, V: CoeffLike, params: MoebiusParams,
                       nodes: Optional[int] = None) -> complex:
    """B as trapezoidal quadrature of (-2 i kappa0 / 2 pi) int U(z) V(conj z) |dz|"""
    u = _as_array(U, params)
    v = _as_array(V, params)
    m = nodes if nodes is not None else 4 * (max(u.size, v.size) + 1)
    z = np.exp(2j * np.pi * np.arange(m) / m)
    values = npoly.polyval(z, u) * npoly.polyval(np.conj(z), v)
    return complex(-2j * params.kappa0 * np.mean(values))


# =================================================================
# RADIAL BASES AND FORM MATRICES
# =================================================================

def _basis_rows(N: int, params: MoebiusParams, family: RadialFamily) -> np.ndarray:
    """Rows: monomial coefficients of Phi_{-1}..Phi_N, each of length N+2"""
    rows = np.zeros((N + 2, N + 2), dtype=complex)
    rows[0, 0] = 1.0
    k = np.arange(N + 1)
    if family == RadialFamily.PSI:
        rows[k + 1, k + 1] = 1.0
        rows[k + 1, k] = -1.0
        return rows / params.two_i_kappa0
    rows[k + 1, k] = 1.0
    rows[k + 1, k + 1] = 1.0
    return 0.5 * rows


def radial_bases(N: int, params: MoebiusParams) -> Tuple[List[HardyCoefficients],
                                                          List[HardyCoefficients]]:
    """Psi_{-1..N} and psi_{-1..N}; psi_k is the transformed derivative of Psi_k"""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    big = _basis_rows(N, params, RadialFamily.PSI)
    small = _basis_rows(N, params, RadialFamily.PSI_PRIME)
    return ([HardyCoefficients(r) for r in big], [HardyCoefficients(r) for r in small])


def radial_rows(N: int, params: MoebiusParams, family: RadialFamily, power: int = 0,
                padding: Optional[int] = None) -> np.ndarray:
    """Coefficient rows of Op Phi_k for Op = D^power (or I^|power| when negative)"""
    if padding is None:
        padding = get_settings().inverse_padding
    return _apply_power_rows(_basis_rows(N, params, family), params, power, padding)


def radial_form_matrix(N: int, params: MoebiusParams, family: RadialFamily,
                       d_power_left: int = 0, d_power_right: int = 0,
                       padding: Optional[int] = None,
                       family_right: Optional[RadialFamily] = None) -> RadialOperatorMatrix:
    """
    (N+2)x(N+2) matrix B(D^a Phi_j, D^b Phi_k), j, k = -1..N.

    Negative powers stand for powers of I. ``family_right`` pairs two
    different families; it defaults to ``family``.
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    for power in (d_power_left, d_power_right):
        if not -2 <= power <= 2:
            raise ValueError(f"radial operator powers must lie in -2..2, got {power}")
    right_family = family_right or family
    left = radial_rows(N, params, family, d_power_left, padding)
    right = radial_rows(N, params, right_family, d_power_right, padding)
    length = max(left.shape[1], right.shape[1])
    entries = -2j * params.kappa0 * (_pad(left, length) @ _pad(right, length).T)
    tag = BasisTag.PSI_BASIS if family == RadialFamily.PSI else BasisTag.PSI_PRIME_BASIS
    return RadialOperatorMatrix(entries, tag, params.kappa0, N)


# =================================================================
# INVERSE TRANSFORM
# =================================================================

def inverse_transform(poly: CoeffLike, params: MoebiusParams) -> Callable[[np.ndarray], np.ndarray]:
    """
    Function of xi whose transform has the given coefficients:
    u(xi) = exp(i kappa0 xi) sum_m d_m (2 i kappa0)^m xi^(m-1)/(m-1)!,
    d_m = sum_j c_j binom(j, m-1).
    """
    c = _as_array(poly, params)
    j = np.arange(c.size)
    pascal = binom(j[None, :], j[:, None])
    d = pascal @ c
    a = params.two_i_kappa0
    factorials = np.array([math.factorial(k) for k in range(c.size)], dtype=float)
    taylor = d * a ** (j + 1) / factorials
    kappa0 = params.kappa0

    def u(xi):
        xi = np.asarray(xi, dtype=complex)
        return np.exp(1j * kappa0 * xi) * npoly.polyval(xi, taylor)

    return u


__all__ = [
    'PoleError', 'NotInImageError', 'SingularOperatorError', 'TSign', 'BasisTag',
    'RadialFamily', 'MoebiusParams', 'HardyCoefficients', 'RadialOperatorMatrix',
    'mobius_s', 'apply_t', 'invert_t_minus', 'd_matrix', 'i_matrix', 'apply_d', 'd_xi',
    'bilinear_b', 'contour_bilinear_b', 'radial_bases', 'radial_rows',
    'radial_form_matrix', 'inverse_transform',
]
