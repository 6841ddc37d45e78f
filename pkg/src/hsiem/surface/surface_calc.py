"""
HSIEM Surface Calculus
Polynomial spaces and differential operators on the reference triangle

Features:
- Monomial bases x^i y^j in graded-lexicographic order
- Spaces P^p, (P^{p-1})^2 and P^{p-2} with their dimensions
- Surface gradient, rotated gradient, scalar curl and divergence as matrices
- Rotation (v1, v2) -> (-v2, v1) on vector fields
- Collapsed Gauss-Legendre quadrature on {x, y >= 0, x + y <= 1}
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Tuple

import numpy as np
import structlog
from numpy.polynomial.legendre import leggauss

from hsiem.utils.hsiem_utils import HSIEMError, matrix_rank, nullity

logger = structlog.get_logger(__name__)

MAX_SURFACE_DEGREE = 8


class SurfaceDegreeError(HSIEMError):
    """Raised when a surface polynomial degree is outside 0..8"""
    pass


class SpaceKind(Enum):
    """Triangle polynomial spaces"""
    SCALAR_H1 = "P^p"
    VECTOR_HCURL = "(P^(p-1))^2"
    SCALAR_L2 = "P^(p-2)"


class SurfaceOp(Enum):
    """Surface differential operators"""
    GRAD = "grad"
    PERP_GRAD = "perp_grad"
    SCALAR_CURL = "scalar_curl"
    DIV = "div"


def _check_degree(p: int) -> int:
    if not isinstance(p, (int, np.integer)) or not 0 <= p <= MAX_SURFACE_DEGREE:
        raise SurfaceDegreeError(f"surface degree must be an integer in 0..{MAX_SURFACE_DEGREE}, got {p!r}")
    return int(p)


def _kind_degree(p: int, kind: SpaceKind) -> int:
    """Polynomial degree of the scalar factor of a space kind"""
    if kind == SpaceKind.SCALAR_H1:
        return p
    if kind == SpaceKind.VECTOR_HCURL:
        return p - 1
    return p - 2


@lru_cache(maxsize=None)
def _exponents(q: int) -> Tuple[Tuple[int, int], ...]:
    return tuple((d - j, j) for d in range(q + 1) for j in range(d + 1))


def monomial_exponents(q: int) -> List[Tuple[int, int]]:
    """Exponents (i, j) of x^i y^j with i + j <= q: (0,0), (1,0), (0,1), (2,0), ..."""
    if q < 0:
        return []
    return list(_exponents(q))


def _scalar_dim(q: int) -> int:
    return (q + 1) * (q + 2) // 2 if q >= 0 else 0


def space_dim(p: int, kind: SpaceKind) -> int:
    """Dimension of a triangle space; 0 when the effective degree is negative"""
    p = _check_degree(p)
    q = _kind_degree(p, kind)
    return 2 * _scalar_dim(q) if kind == SpaceKind.VECTOR_HCURL else _scalar_dim(q)


@dataclass(frozen=True)
class TrianglePolySpace:
    """Polynomial space on the reference triangle in the monomial basis"""
    p: int
    kind: SpaceKind

    def __post_init__(self):
        _check_degree(self.p)

    @property
    def scalar_degree(self) -> int:
        return _kind_degree(self.p, self.kind)

    @property
    def dim(self) -> int:
        return space_dim(self.p, self.kind)

    @property
    def exponents(self) -> List[Tuple[int, int]]:
        return monomial_exponents(self.scalar_degree)


# =================================================================
# DIFFERENTIAL OPERATORS
# =================================================================

def _partial(q: int, axis: int) -> np.ndarray:
    """Matrix of d/dx (axis 0) or d/dy (axis 1) from P^q to P^(q-1)"""
    cols = monomial_exponents(q)
    rows = {e: r for r, e in enumerate(monomial_exponents(q - 1))}
    out = np.zeros((len(rows), len(cols)))
    for c, (i, j) in enumerate(cols):
        power = (i, j)[axis]
        if power == 0:
            continue
        target = (i - 1, j) if axis == 0 else (i, j - 1)
        out[rows[target], c] = power
    return out


def surf_operator(op: SurfaceOp, p: int) -> np.ndarray:
    """
    Monomial matrix of a surface operator.

    grad, perp_grad: P^p -> (P^(p-1))^2 with perp_grad = (-dy, dx)
    scalar_curl, div: (P^(p-1))^2 -> P^(p-2)
    Vector fields are stored component-major: all first components, then all second.
    """
    p = _check_degree(p)
    if op in (SurfaceOp.GRAD, SurfaceOp.PERP_GRAD):
        dx, dy = _partial(p, 0), _partial(p, 1)
        if op == SurfaceOp.GRAD:
            return np.vstack([dx, dy])
        return np.vstack([-dy, dx])
    dx, dy = _partial(p - 1, 0), _partial(p - 1, 1)
    if p == 0:
        return np.zeros((0, 0))
    if op == SurfaceOp.SCALAR_CURL:
        return np.hstack([-dy, dx])
    return np.hstack([dx, dy])


def rotation_matrix(p: int) -> np.ndarray:
    """(v1, v2) -> (-v2, v1) on (P^(p-1))^2"""
    n = _scalar_dim(_check_degree(p) - 1)
    eye, zero = np.eye(n), np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


# =================================================================
# EVALUATION AND QUADRATURE
# =================================================================

def _monomial_values(q: int, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    return np.array([x ** i * y ** j for i, j in monomial_exponents(q)]).reshape(-1, len(x))


def evaluate_basis(p: int, kind: SpaceKind, points: np.ndarray) -> np.ndarray:
    """Basis values at points (n x 2): dim x n for scalars, dim x 2 x n for vectors"""
    space = TrianglePolySpace(p, kind)
    values = _monomial_values(space.scalar_degree, points)
    if kind != SpaceKind.VECTOR_HCURL:
        return values
    n_scalar, n_pts = values.shape
    out = np.zeros((2 * n_scalar, 2, n_pts))
    out[:n_scalar, 0, :] = values
    out[n_scalar:, 1, :] = values
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature rule on the reference triangle"""
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate values sampled at the nodes along the last axis"""
        return np.asarray(values) @ self.weights


@lru_cache(maxsize=64)
def _collapsed_rule(target_degree: int) -> Tuple[np.ndarray, np.ndarray]:
    # x = u, y = v (1 - u); the Jacobian (1 - u) raises the degree in u by one
    n_u = (target_degree + 3) // 2
    n_v = (target_degree + 2) // 2
    tu, wu = leggauss(n_u)
    tv, wv = leggauss(n_v)
    u = 0.5 * (tu + 1.0)
    v = 0.5 * (tv + 1.0)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    weights = np.outer(0.5 * wu, 0.5 * wv) * (1.0 - uu)
    nodes = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    nodes.setflags(write=False)
    flat = weights.ravel()
    flat.setflags(write=False)
    return nodes, flat


def triangle_quadrature(target_degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss-Legendre rule exact for polynomials of total degree target_degree"""
    if target_degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {target_degree}")
    nodes, weights = _collapsed_rule(int(target_degree))
    logger.debug("triangle_quadrature", degree=target_degree, nodes=len(weights))
    return QuadratureRule(nodes, weights, int(target_degree))


__all__ = [
    'MAX_SURFACE_DEGREE', 'SurfaceDegreeError', 'SpaceKind', 'SurfaceOp', 'TrianglePolySpace',
    'QuadratureRule', 'monomial_exponents', 'space_dim', 'surf_operator', 'rotation_matrix',
    'evaluate_basis', 'triangle_quadrature', 'matrix_rank', 'nullity',
]
