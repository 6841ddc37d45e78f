"""
HSIEM Segment Forms
Exterior bilinear forms on one infinite pyramidal frustum

Features:
- Frustum geometry: Jacobian factor J^, weights G = |J^| J^-1 J^-T and C = J^T J^ / |J^|
- H1, H(curl) and H(div) mass and stiffness matrices on the tensor spaces
- Powers of (1 + xi) turned into powers of D (positive) or I (negative)
- Closed-form Hardy pairing and a xi-quadrature oracle pairing
- Oracle comparison and chain compatibility report

A segment is K = {V0 + (1 + xi)(X(x^) - V0) : xi >= 0, x^ in T}, where X is the
affine chart of the surface triangle T.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial.legendre import leggauss

from hsiem.derham.derham_tensor import DeRhamComplex, build_complex
from hsiem.hardy.hardy_core import (
    MoebiusParams, RadialFamily, inverse_transform, radial_form_matrix, radial_rows,
)
from hsiem.surface.surface_calc import (
    QuadratureRule, SpaceKind, SurfaceOp, evaluate_basis, surf_operator,
    triangle_quadrature,
)
from hsiem.utils.hsiem_utils import HSIEMError

logger = structlog.get_logger(__name__)

PSI = RadialFamily.PSI
PSI_PRIME = RadialFamily.PSI_PRIME

Permittivity = Union[complex, float, Callable[[np.ndarray], np.ndarray]]


class GeometryError(HSIEMError):
    """Raised for degenerate frustum segments"""
    pass


class FormKind(Enum):
    """Function spaces with segment forms"""
    H1 = "h1"
    HCURL = "hcurl"
    HDIV = "hdiv"


@dataclass(frozen=True)
class PrismSegment:
    """Surface triangle (3 x 3, one vertex per row) and reference point v0"""
    triangle: np.ndarray
    v0: np.ndarray
    eps: Permittivity = 1.0
    quad: Optional[QuadratureRule] = None

    def __post_init__(self):
        tri = np.array(self.triangle, dtype=float)
        v0 = np.array(self.v0, dtype=float).ravel()
        if tri.shape != (3, 3) or v0.shape != (3,):
            raise GeometryError(f"segment needs 3 vertices in R^3 and v0 in R^3, got {tri.shape}, {v0.shape}")
        if not (np.all(np.isfinite(tri)) and np.all(np.isfinite(v0))):
            raise GeometryError("segment coordinates must be finite")
        tri.setflags(write=False)
        v0.setflags(write=False)
        object.__setattr__(self, "triangle", tri)
        object.__setattr__(self, "v0", v0)

    def surface_point(self, nodes: np.ndarray) -> np.ndarray:
        """X(x^) for reference nodes (n x 2)"""
        p0, p1, p2 = self.triangle
        nodes = np.atleast_2d(nodes)
        return p0 + np.outer(nodes[:, 0], p1 - p0) + np.outer(nodes[:, 1], p2 - p0)

    def rule(self, p: int) -> QuadratureRule:
        return self.quad if self.quad is not None else triangle_quadrature(2 * p + 2)

    def eps_values(self, points: np.ndarray) -> np.ndarray:
        if callable(self.eps):
            return np.asarray(self.eps(points), dtype=complex).reshape(len(points))
        return np.full(len(points), complex(self.eps))


@dataclass(frozen=True)
class GeometryFactors:
    """Geometry weights at the quadrature nodes (first axis: node)"""
    nodes: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    jac: np.ndarray
    det: np.ndarray
    g: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class SegmentFormSet:
    """Mass and stiffness matrices of one space on one segment"""
    kind: FormKind
    mass: np.ndarray
    stiffness: np.ndarray
    ordering: List[Tuple[str, int, int]] = field(repr=False)

    def __post_init__(self):
        for matrix in (self.mass, self.stiffness):
            matrix.setflags(write=False)


# =================================================================
# GEOMETRY
# =================================================================

def geometry_factors(segment: PrismSegment, rule: Optional[QuadratureRule] = None) -> GeometryFactors:
    """
    J^(x^) = [X(x^) - V0, P1 - P0, P2 - P0]; the (1 + xi) scalings of the full
    Jacobian are left out and handled by the radial operators.
    """
    rule = rule or segment.rule(1)
    p0, p1, p2 = segment.triangle
    points = segment.surface_point(rule.nodes)
    n = len(points)
    jac = np.empty((n, 3, 3))
    jac[:, :, 0] = points - segment.v0
    jac[:, :, 1] = p1 - p0
    jac[:, :, 2] = p2 - p0

    scale = max(float(np.max(np.linalg.norm(jac, axis=1))), np.finfo(float).tiny)
    det = np.abs(np.linalg.det(jac))
    if np.any(det < 1e-12 * scale ** 3):
        raise GeometryError(
            f"degenerate segment: |det J^| = {det.min():.3e} below {1e-12 * scale ** 3:.3e}")
    inv = np.linalg.inv(jac)
    g = det[:, None, None] * inv @ np.swapaxes(inv, 1, 2)
    c = np.swapaxes(jac, 1, 2) @ jac / det[:, None, None]
    return GeometryFactors(rule.nodes, rule.weights, points, jac, det, g, c)


# =================================================================
# RADIAL PAIRINGS
# =================================================================

class RadialPairing:
    """
    Radial factor of a tensor form: the (N+2) x (N+2) matrix of
    int_0^inf (1+xi)^(a+b) Phi_j(xi) Phi'_k(xi) dxi.
    """

    def __init__(self, N: int, params: MoebiusParams):
        self.N = N
        self.params = params
        self._cache: Dict[Tuple, np.ndarray] = {}

    def matrix(self, left: RadialFamily, left_power: int,
               right: RadialFamily, right_power: int) -> np.ndarray:
        key = (left, left_power, right, right_power)
        if key not in self._cache:
            self._cache[key] = self._compute(*key)
        return self._cache[key]

    def _compute(self, left, left_power, right, right_power) -> np.ndarray:
        raise NotImplementedError


class HardyPairing(RadialPairing):
    """Closed form through B with D / I powers"""

    def __init__(self, N: int, params: MoebiusParams, padding: Optional[int] = None):
        super().__init__(N, params)
        self.padding = padding

    def _compute(self, left, left_power, right, right_power):
        return radial_form_matrix(self.N, self.params, left, left_power, right_power,
                                  padding=self.padding, family_right=right).entries


class QuadraturePairing(RadialPairing):
    """
    Oracle pairing by composite Gauss-Legendre integration in xi.

    path="ray" integrates along xi = t * i conj(kappa0)/|kappa0|, where the
    exponential factor decays like exp(-|kappa0| t); path="real" integrates
    over [0, xi_max] and needs Im kappa0 > 0.
    """

    def __init__(self, N: int, params: MoebiusParams, path: str = "ray",
                 xi_max: Optional[float] = None, panel_width: float = 2.0,
                 nodes_per_panel: int = 16):
        super().__init__(N, params)
        kappa0 = params.kappa0
        if path == "ray":
            direction = 1j * np.conj(kappa0) / abs(kappa0)
            decay = abs(kappa0)
        elif path == "real":
            if kappa0.imag <= 0:
                raise ValueError(f"real-axis oracle needs Im kappa0 > 0, got {kappa0}")
            direction = 1.0 + 0j
            decay = kappa0.imag
        else:
            raise ValueError(f"path must be 'ray' or 'real', got {path!r}")
        # products of two basis functions decay like x^(2N+8) exp(-x), x = 2 * decay * t
        x_max = 60.0 + 4.0 * (N + 4)
        t_max = xi_max if xi_max is not None else x_max / (2.0 * decay)
        panels = max(1, int(np.ceil(2.0 * decay * t_max / panel_width)))
        ref_nodes, ref_weights = leggauss(nodes_per_panel)
        edges = np.linspace(0.0, t_max, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
        w = (half[:, None] * ref_weights[None, :]).ravel()
        self.path = path
        self.xi = direction * t
        self.w = direction * w
        self._values: Dict[RadialFamily, np.ndarray] = {}

    def values(self, family: RadialFamily) -> np.ndarray:
        """Basis functions Phi_{-1..N} at the xi nodes"""
        if family not in self._values:
            rows = radial_rows(self.N, self.params, family, 0)
            self._values[family] = np.array(
                [inverse_transform(row, self.params)(self.xi) for row in rows])
        return self._values[family]

    def _compute(self, left, left_power, right, right_power):
        weight = self.w * (1.0 + self.xi) ** (left_power + right_power)
        return (self.values(left) * weight) @ self.values(right).T


# =================================================================
# TENSOR ASSEMBLY
# =================================================================

@dataclass(frozen=True)
class _Part:
    dofs: slice
    family: RadialFamily
    power: int
    values: np.ndarray


def _tensor_form(components: Sequence[Sequence[_Part]], weights: np.ndarray, size: int,
                 pairing: RadialPairing) -> np.ndarray:
    """sum_ab int W_ab(x^) (comp_a of u)(comp_b of v) with radial parts through the pairing"""
    out = np.zeros((size, size), dtype=complex)
    for a, parts_a in enumerate(components):
        for b, parts_b in enumerate(components):
            w_ab = weights[a, b]
            if not np.any(w_ab):
                continue
            for pa in parts_a:
                for pb in parts_b:
                    if pa.values.shape[0] == 0 or pb.values.shape[0] == 0:
                        continue
                    surf = (pa.values * w_ab) @ pb.values.T
                    radial = pairing.matrix(pa.family, pa.power, pb.family, pb.power)
                    out[pa.dofs, pb.dofs] += np.kron(radial, surf)
    return out


class _SurfaceValues:
    """Surface basis values and derivatives at the quadrature nodes"""

    def __init__(self, p: int, nodes: np.ndarray):
        self.scalar = evaluate_basis(p, SpaceKind.SCALAR_H1, nodes)
        lower = evaluate_basis(p - 1, SpaceKind.SCALAR_H1, nodes)
        grad = surf_operator(SurfaceOp.GRAD, p)
        n_low = lower.shape[0]
        self.dx = grad[:n_low].T @ lower
        self.dy = grad[n_low:].T @ lower
        vector = evaluate_basis(p, SpaceKind.VECTOR_HCURL, nodes)
        self.vec_x = vector[:, 0, :]
        self.vec_y = vector[:, 1, :]
        self.l2 = evaluate_basis(p, SpaceKind.SCALAR_L2, nodes)


def _setup(segment: PrismSegment, p: int, N: int, params: MoebiusParams,
           pairing: Optional[RadialPairing]):
    if p < 1:
        raise ValueError(f"surface order must be >= 1, got {p}")
    if N < 0:
        raise ValueError(f"radial truncation must be >= 0, got {N}")
    geo = geometry_factors(segment, segment.rule(p))
    pairing = pairing or HardyPairing(N, params)
    if pairing.N != N or pairing.params != params:
        raise ValueError(f"pairing built for N={pairing.N}, kappa0={pairing.params.kappa0} "
                         f"used with N={N}, kappa0={params.kappa0}")
    return geo, _SurfaceValues(p, geo.nodes), pairing


def _blocks(cx: DeRhamComplex, space: str) -> Dict[str, slice]:
    return cx.block_slices(space)


def _h1_forms(segment, geo, sv, pairing, N) -> Tuple[np.ndarray, np.ndarray]:
    size = (N + 2) * sv.scalar.shape[0]
    dofs = slice(0, size)
    eps = segment.eps_values(geo.points)
    mass_w = (eps * geo.det * geo.weights)[None, None, :]
    mass = _tensor_form([[_Part(dofs, PSI, 1, sv.scalar)]], mass_w, size, pairing)
    stiff_w = np.moveaxis(geo.g, 0, -1) * geo.weights
    components = [
        [_Part(dofs, PSI_PRIME, 1, sv.scalar)],
        [_Part(dofs, PSI, 0, sv.dx)],
        [_Part(dofs, PSI, 0, sv.dy)],
    ]
    return mass, _tensor_form(components, stiff_w, size, pairing)


def _hcurl_mass(segment, geo, sv, pairing, cx) -> np.ndarray:
    blocks = _blocks(cx, "V")
    eps = segment.eps_values(geo.points)
    weights = np.moveaxis(geo.g, 0, -1) * (eps * geo.weights)
    components = [
        [_Part(blocks["xi"], PSI_PRIME, 1, sv.scalar)],
        [_Part(blocks["tangential"], PSI, 0, sv.vec_x)],
        [_Part(blocks["tangential"], PSI, 0, sv.vec_y)],
    ]
    return _tensor_form(components, weights, cx.dims[1], pairing)


def _hdiv_mass(geo, sv, pairing, cx) -> np.ndarray:
    blocks = _blocks(cx, "Q")
    weights = np.moveaxis(geo.c, 0, -1) * geo.weights
    components = [
        [_Part(blocks["xi"], PSI, -1, sv.l2)],
        [_Part(blocks["tangential"], PSI_PRIME, 0, sv.vec_x)],
        [_Part(blocks["tangential"], PSI_PRIME, 0, sv.vec_y)],
    ]
    return _tensor_form(components, weights, cx.dims[2], pairing)


def _l2_mass(geo, sv, pairing, cx) -> np.ndarray:
    weights = (geo.weights / geo.det)[None, None, :]
    return _tensor_form([[_Part(slice(0, cx.dims[3]), PSI_PRIME, -1, sv.l2)]],
                        weights, cx.dims[3], pairing)


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


# =================================================================
# PUBLIC ASSEMBLY
# =================================================================

def assemble_h1(segment: PrismSegment, p: int, N: int, params: MoebiusParams,
                pairing: Optional[RadialPairing] = None) -> SegmentFormSet:
    """
    H1 forms on Psi (x) P^p.

    mass: eps |J^| B(D Psi_j, D Psi_k); stiffness: G weights with components
    (D psi (x) m, Psi (x) dx m, Psi (x) dy m).
    """
    geo, sv, pairing = _setup(segment, p, N, params, pairing)
    mass, stiffness = _h1_forms(segment, geo, sv, pairing, N)
    cx = build_complex(p, N, params)
    logger.debug("h1_assembled", p=p, N=N, size=mass.shape[0])
    return SegmentFormSet(FormKind.H1, mass, stiffness, cx.orderings["W"])


def assemble_hcurl(segment: PrismSegment, p: int, N: int, params: MoebiusParams,
                   pairing: Optional[RadialPairing] = None) -> SegmentFormSet:
    """H(curl) forms on V; the stiffness is the H(div) mass pulled back through the curl chain"""
    geo, sv, pairing = _setup(segment, p, N, params, pairing)
    cx = build_complex(p, N, params)
    mass = _hcurl_mass(segment, geo, sv, pairing, cx)
    stiffness = cx.curl.T @ _hdiv_mass(geo, sv, pairing, cx) @ cx.curl
    logger.debug("hcurl_assembled", p=p, N=N, size=mass.shape[0])
    return SegmentFormSet(FormKind.HCURL, mass, _symmetrize(stiffness), cx.orderings["V"])


def assemble_hdiv(segment: PrismSegment, p: int, N: int, params: MoebiusParams,
                  pairing: Optional[RadialPairing] = None) -> SegmentFormSet:
    """
    H(div) forms on Q. The mass has C weights with I on the xi component; the
    stiffness pulls back |J^|^-1 B(I psi_j, I psi_k) through the divergence chain.
    """
    geo, sv, pairing = _setup(segment, p, N, params, pairing)
    cx = build_complex(p, N, params)
    mass = _hdiv_mass(geo, sv, pairing, cx)
    stiffness = cx.divergence.T @ _l2_mass(geo, sv, pairing, cx) @ cx.divergence
    logger.debug("hdiv_assembled", p=p, N=N, size=mass.shape[0])
    return SegmentFormSet(FormKind.HDIV, mass, _symmetrize(stiffness), cx.orderings["Q"])


ASSEMBLERS = {
    FormKind.H1: assemble_h1,
    FormKind.HCURL: assemble_hcurl,
    FormKind.HDIV: assemble_hdiv,
}


# =================================================================
# ORACLE AND CHAIN CHECKS
# =================================================================

@dataclass(frozen=True)
class FormsCheckReport:
    """Hardy forms against the xi-quadrature oracle plus chain residuals"""
    rows: List[Dict[str, object]]
    chain_residuals: Dict[str, float]
    tolerance: float
    passed: bool


def relative_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - b| / max |b|"""
    scale = float(np.max(np.abs(b), initial=0.0))
    diff = float(np.max(np.abs(a - b), initial=0.0))
    return diff / scale if scale > 0 else diff


def relative_size(a: np.ndarray, reference: np.ndarray) -> float:
    """max |a| / max |reference|"""
    scale = float(np.max(np.abs(reference), initial=0.0))
    size = float(np.max(np.abs(a), initial=0.0))
    return size / scale if scale > 0 else size


def forms_check(segment: PrismSegment, p: int, N: int, params: MoebiusParams,
                tol: float = 1e-6, chain_tol: float = 1e-10,
                path: str = "ray") -> FormsCheckReport:
    """Compare all six segment matrices with the oracle and check the chain identities"""
    hardy = HardyPairing(N, params)
    oracle = QuadraturePairing(N, params, path=path)
    rows = []
    forms = {}
    for kind, assemble in ASSEMBLERS.items():
        exact = assemble(segment, p, N, params, hardy)
        reference = assemble(segment, p, N, params, oracle)
        forms[kind] = exact
        for name in ("mass", "stiffness"):
            matrix = getattr(exact, name)
            error = relative_deviation(matrix, getattr(reference, name))
            symmetry = relative_deviation(matrix.T, matrix)
            rows.append({
                "space": kind.value, "matrix": name, "max_rel_error": error,
                "symmetry_error": symmetry, "pass": bool(error <= tol and symmetry <= 1e-12),
            })

    cx = build_complex(p, N, params)
    unit = replace(segment, eps=1.0)
    geo, sv, _ = _setup(unit, p, N, params, hardy)
    stiffness_h1 = _h1_forms(unit, geo, sv, hardy, N)[1]
    pulled = cx.gradient.T @ _hcurl_mass(unit, geo, sv, hardy, cx) @ cx.gradient
    chain = {
        "grad_pullback": relative_deviation(pulled, stiffness_h1),
        "curl_grad": relative_size(forms[FormKind.HCURL].stiffness @ cx.gradient,
                                   forms[FormKind.HCURL].stiffness),
        "div_curl": relative_size(forms[FormKind.HDIV].stiffness @ cx.curl,
                                  forms[FormKind.HDIV].stiffness),
    }
    passed = all(r["pass"] for r in rows) and all(v <= chain_tol for v in chain.values())
    if not passed:
        logger.warning("forms_check_failed", p=p, N=N, chain=chain,
                       worst=max(r["max_rel_error"] for r in rows))
    return FormsCheckReport(rows, chain, tol, passed)


__all__ = [
    'GeometryError', 'FormKind', 'PrismSegment', 'GeometryFactors', 'SegmentFormSet',
    'RadialPairing', 'HardyPairing', 'QuadraturePairing', 'geometry_factors',
    'assemble_h1', 'assemble_hcurl', 'assemble_hdiv', 'ASSEMBLERS', 'FormsCheckReport',
    'relative_deviation', 'relative_size', 'forms_check',
]
