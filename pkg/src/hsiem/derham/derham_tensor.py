"""
HSIEM De Rham Tensor Complex
Discrete tensor-product spaces on one infinite segment and their chain maps

Features:
- Spaces W (H1), V (H(curl)), Q (H(div)) and X (L2) as radial x surface tensor products
- Gradient-, curl- and divergence-like chain matrices
- Local exactness verification by composition norms and rank counting
- Degree-of-freedom classification by topological entity
- Parallel sweeps over (p, N) grids
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import structlog

from hsiem.hardy.hardy_core import MoebiusParams
from hsiem.surface.surface_calc import (
    SpaceKind, SurfaceOp, rotation_matrix, space_dim, surf_operator,
)
from hsiem.utils.hsiem_utils import HSIEMError, hsiem_utils, matrix_rank, nullity

logger = structlog.get_logger(__name__)

SPACES = ("W", "V", "Q", "X")
ENTITIES = ("vertex", "edge", "surface", "ray", "face", "segment")

# (space, block name, radial family, surface kind)
BLOCKS = {
    "W": (("w", "Psi", SpaceKind.SCALAR_H1),),
    "V": (("xi", "psi", SpaceKind.SCALAR_H1), ("tangential", "Psi", SpaceKind.VECTOR_HCURL)),
    "Q": (("xi", "Psi", SpaceKind.SCALAR_L2), ("tangential", "psi", SpaceKind.VECTOR_HCURL)),
    "X": (("x", "psi", SpaceKind.SCALAR_L2),),
}


class StructuralError(HSIEMError):
    """Raised when chain matrices do not fit together"""
    pass


@dataclass(frozen=True)
class DeRhamComplex:
    """Spaces W, V, Q, X of one segment with their three chain matrices"""
    p: int
    N: int
    kappa0: complex
    dims: Tuple[int, int, int, int]
    chain: Tuple[np.ndarray, np.ndarray, np.ndarray]
    orderings: Dict[str, List[Tuple[str, int, int]]] = field(repr=False)

    @property
    def gradient(self) -> np.ndarray:
        return self.chain[0]

    @property
    def curl(self) -> np.ndarray:
        return self.chain[1]

    @property
    def divergence(self) -> np.ndarray:
        return self.chain[2]

    def block_slices(self, space: str) -> Dict[str, slice]:
        """Row ranges of each component block of a space"""
        out, start = {}, 0
        for name, _, kind in BLOCKS[space]:
            size = (self.N + 2) * space_dim(self.p, kind)
            out[name] = slice(start, start + size)
            start += size
        return out


@dataclass(frozen=True)
class ExactnessReport:
    """Outcome of a local exactness check"""
    p: int
    N: int
    composition_norms: Tuple[float, float]
    ranks: Tuple[int, int, int]
    kernel_dims: Tuple[int, int, int]
    dim_x: int
    passed: bool
    tolerance: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "p": self.p,
            "N": self.N,
            "curl_grad_norm": self.composition_norms[0],
            "div_curl_norm": self.composition_norms[1],
            "rank_grad": self.ranks[0],
            "rank_curl": self.ranks[1],
            "rank_div": self.ranks[2],
            "ker_grad": self.kernel_dims[0],
            "ker_curl": self.kernel_dims[1],
            "ker_div": self.kernel_dims[2],
            "dim_x": self.dim_x,
            "passed": self.passed,
        }


def complex_dims(p: int, N: int) -> Tuple[int, int, int, int]:
    """Closed-form dimensions of W, V, Q, X"""
    h1 = (p + 2) * (p + 1) // 2
    vec = (p + 1) * p
    l2 = p * (p - 1) // 2
    return (h1 * (N + 2), (N + 2) * (h1 + vec), (N + 2) * (l2 + vec), l2 * (N + 2))


def _ordering(space: str, p: int, N: int) -> List[Tuple[str, int, int]]:
    """Basis labels (block, radial index k, surface index l); radial index is outer"""
    labels = []
    for name, _, kind in BLOCKS[space]:
        n_surf = space_dim(p, kind)
        labels.extend((name, k, l) for k in range(-1, N + 1) for l in range(n_surf))
    return labels


# =================================================================
# CONSTRUCTION
# =================================================================

def build_complex(p: int, N: int, params: Optional[MoebiusParams] = None) -> DeRhamComplex:
    """
    Assemble the three chain matrices of the tensor complex.

    The radial derivative maps Psi_k to psi_k, so in these coordinates it is
    the identity and no matrix depends on kappa0.
    """
    if p < 1:
        raise ValueError(f"surface order must be >= 1, got {p}")
    if N < 0:
        raise ValueError(f"radial truncation must be >= 0, got {N}")
    params = params or MoebiusParams(1.0)

    radial = np.eye(N + 2)
    grad = surf_operator(SurfaceOp.GRAD, p)
    perp = surf_operator(SurfaceOp.PERP_GRAD, p)
    scurl = surf_operator(SurfaceOp.SCALAR_CURL, p)
    div = surf_operator(SurfaceOp.DIV, p)
    rot = rotation_matrix(p)
    n_w = space_dim(p, SpaceKind.SCALAR_H1)
    n_x = space_dim(p, SpaceKind.SCALAR_L2)
    n_v = space_dim(p, SpaceKind.VECTOR_HCURL)

    first = np.vstack([np.kron(radial, np.eye(n_w)), np.kron(radial, grad)])
    second = np.block([
        [np.zeros(((N + 2) * n_x, (N + 2) * n_w)), np.kron(radial, scurl)],
        [-np.kron(radial, perp), np.kron(radial, rot)],
    ])
    third = np.hstack([np.kron(radial, np.eye(n_x)), np.kron(radial, div)])

    dims = complex_dims(p, N)
    result = DeRhamComplex(
        p=p, N=N, kappa0=params.kappa0, dims=dims, chain=(first, second, third),
        orderings={space: _ordering(space, p, N) for space in SPACES},
    )
    _check_shapes(result)
    logger.debug("complex_built", p=p, N=N, dims=dims)
    return result


def _check_shapes(cx: DeRhamComplex) -> None:
    dim_w, dim_v, dim_q, dim_x = cx.dims
    expected = ((dim_v, dim_w), (dim_q, dim_v), (dim_x, dim_q))
    for name, matrix, shape in zip(("gradient", "curl", "divergence"), cx.chain, expected):
        if matrix.shape != shape:
            raise StructuralError(f"{name} chain matrix has shape {matrix.shape}, expected {shape}")


# =================================================================
# VERIFICATION
# =================================================================

def verify_exactness(cx: DeRhamComplex, tol: float = 1e-12,
                     rank_rtol: Optional[float] = None) -> ExactnessReport:
    """Check that compositions vanish and the rank chain is that of an exact sequence"""
    _check_shapes(cx)
    first, second, third = cx.chain
    norms = (float(np.abs(second @ first).max(initial=0.0)),
             float(np.abs(third @ second).max(initial=0.0)))
    ranks = tuple(matrix_rank(m, rank_rtol) for m in cx.chain)
    kernels = tuple(nullity(m, rank_rtol) for m in cx.chain)
    dim_x = cx.dims[3]

    passed = (max(norms) <= tol
              and kernels[0] == 0
              and ranks[0] == kernels[1]
              and ranks[1] == kernels[2]
              and ranks[2] == dim_x)
    report = ExactnessReport(cx.p, cx.N, norms, ranks, kernels, dim_x, passed, tol)
    if passed:
        logger.info("exactness_verified", p=cx.p, N=cx.N, ranks=ranks)
    else:
        logger.warning("exactness_failed", p=cx.p, N=cx.N, norms=norms, ranks=ranks,
                       kernel_dims=kernels)
    return report


def sweep_exactness(p_values: Iterable[int], N_values: Iterable[int],
                    tol: float = 1e-12) -> List[ExactnessReport]:
    """Exactness reports over a (p, N) grid, in row-major grid order"""
    grid = [(p, n) for p in p_values for n in N_values]
    return hsiem_utils.map_ordered(lambda pn: verify_exactness(build_complex(*pn), tol), grid)


# =================================================================
# DEGREE OF FREEDOM BOOKKEEPING
# =================================================================

def dof_classification(p: int, N: int) -> Dict[str, Dict[str, int]]:
    """
    Number of basis functions of each space attached to vertices, edges, the
    surface triangle, the three infinite rays, the three infinite faces and
    the segment interior.
    """
    if p < 2:
        raise ValueError(f"entity classification needs p >= 2, got {p}")
    if N < 0:
        raise ValueError(f"radial truncation must be >= 0, got {N}")
    r = N + 1
    full = N + 2
    w = {"vertex": 3, "edge": 3 * (p - 1), "surface": (p - 2) * (p - 1) // 2,
         "ray": 3 * r, "face": 3 * (p - 1) * r, "segment": (p - 2) * (p - 1) // 2 * r}
    v = {"vertex": 0, "edge": 3 * p, "surface": (p - 2) * p, "ray": 3 * full,
         "face": 3 * p * r + 3 * (p - 1) * full,
         "segment": (p - 2) * p * r + (p - 2) * (p - 1) // 2 * full}
    q = {"vertex": 0, "edge": 0, "surface": p * (p - 1) // 2, "ray": 0, "face": 3 * p * full,
         "segment": p * (p - 1) // 2 * r + (p - 2) * p * full}
    x = {"vertex": 0, "edge": 0, "surface": 0, "ray": 0, "face": 0,
         "segment": p * (p - 1) // 2 * full}
    table = {"W": w, "V": v, "Q": q, "X": x}
    for space, dim in zip(SPACES, complex_dims(p, N)):
        if sum(table[space].values()) != dim:
            raise StructuralError(
                f"{space} entity counts sum to {sum(table[space].values())}, expected {dim}")
    return table


__all__ = [
    'SPACES', 'ENTITIES', 'StructuralError', 'DeRhamComplex', 'ExactnessReport',
    'complex_dims', 'build_complex', 'verify_exactness', 'sweep_exactness',
    'dof_classification',
]
