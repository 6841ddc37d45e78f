"""
HSIEM 1D Exterior Problems
High-order interval FEM coupled to the Hardy space exterior

Features:
- Integrated-Legendre hierarchic elements on [a, 0]
- Hardy exterior blocks B(psi_j, psi_k) - kappa^2 B(Psi_j, Psi_k) sharing the trace DOF at x = 0
- Exact DtN substitute (-i kappa) for isolating interior errors
- Discrete DtN number by Schur complement of the exterior block
- Scattering solves with manufactured outgoing solutions
- Slab resonances with spurious-mode filtering and closed-form references

Time convention: outgoing waves are exp(+i kappa x), so the exact DtN
contribution to the boundary diagonal is -i kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre

from hsiem.hardy.hardy_core import MoebiusParams, RadialFamily, radial_form_matrix
from hsiem.linalg.dense_eig import (
    SingularMatrixError, Spectrum, factorize, shift_invert_eig,
)
from hsiem.utils.hsiem_utils import HSIEMError

logger = structlog.get_logger(__name__)


class ProblemSetupError(HSIEMError):
    """Raised for inconsistent problem definitions"""
    pass


class DtNSingularError(HSIEMError):
    """Raised when kappa^2 hits an eigenvalue of the interior Hardy block"""
    pass


class BoundaryKind(Enum):
    """Condition at the left end x = a"""
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class ExteriorKind(Enum):
    """Treatment of the exterior x > 0"""
    HARDY = "hardy"
    EXACT_DTN = "exact_dtn"


@dataclass(frozen=True)
class Interval1DProblem:
    """
    -u'' - kappa^2 eps u = f on [a, 0], -u'' - kappa^2 u = 0 on (0, inf), u outgoing.

    eps is a constant or one value per element. The Neumann value is u'(a).
    """
    kappa: complex
    kappa0: complex = 1.0
    N: int = 10
    a: float = -1.0
    elements: int = 4
    order: int = 4
    eps: Union[complex, Sequence[complex]] = 1.0
    boundary: BoundaryKind = BoundaryKind.DIRICHLET
    boundary_value: complex = 0.0
    exterior: ExteriorKind = ExteriorKind.HARDY
    source: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.a < 0:
            raise ProblemSetupError(f"interior interval needs a < 0, got a={self.a}")
        if self.elements < 1:
            raise ProblemSetupError(f"need at least one element, got {self.elements}")
        if self.order < 1:
            raise ProblemSetupError(f"polynomial order must be >= 1, got {self.order}")
        if self.N < 0:
            raise ProblemSetupError(f"Hardy truncation must be >= 0, got {self.N}")
        try:
            np.broadcast_to(np.asarray(self.eps, dtype=complex), (self.elements,))
        except ValueError:
            raise ProblemSetupError(f"eps needs one value per element ({self.elements})")
        object.__setattr__(self, "kappa", complex(self.kappa))
        object.__setattr__(self, "kappa0", complex(self.kappa0))
        object.__setattr__(self, "boundary", BoundaryKind(self.boundary))
        object.__setattr__(self, "exterior", ExteriorKind(self.exterior))

    @property
    def params(self) -> MoebiusParams:
        return MoebiusParams(self.kappa0)

    @property
    def eps_per_element(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.eps, dtype=complex), (self.elements,)).copy()


@dataclass(frozen=True)
class DofMap:
    """Global numbering: vertices, then element bubbles, then Hardy DOFs Psi_0..Psi_N"""
    elements: int
    order: int
    N: int
    hardy: bool

    @property
    def trace(self) -> int:
        """Vertex at x = 0, shared with Psi_{-1}"""
        return self.elements

    @property
    def n_interior(self) -> int:
        return self.elements + 1 + self.elements * (self.order - 1)

    @property
    def size(self) -> int:
        return self.n_interior + (self.N + 1 if self.hardy else 0)

    def element(self, e: int) -> np.ndarray:
        bubbles = self.elements + 1 + e * (self.order - 1) + np.arange(self.order - 1)
        return np.concatenate([[e, e + 1], bubbles]).astype(int)

    def hardy_dofs(self) -> np.ndarray:
        """Global indices of Psi_{-1}..Psi_N"""
        if not self.hardy:
            return np.array([self.trace])
        return np.concatenate([[self.trace], self.n_interior + np.arange(self.N + 1)]).astype(int)


# =================================================================
# INTERIOR ELEMENTS
# =================================================================

def shape_functions(order: int, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrated-Legendre shape functions on [-1, 1] and their t-derivatives.

    Rows: (1-t)/2, (1+t)/2, then (L_k - L_{k-2}) / sqrt(2(2k-1)) for k = 2..order.
    """
    t = np.asarray(t, dtype=float)
    values = np.zeros((order + 1, t.size))
    derivs = np.zeros((order + 1, t.size))
    values[0], values[1] = 0.5 * (1 - t), 0.5 * (1 + t)
    derivs[0], derivs[1] = -0.5, 0.5
    for k in range(2, order + 1):
        values[k] = (eval_legendre(k, t) - eval_legendre(k - 2, t)) / np.sqrt(2 * (2 * k - 1))
        derivs[k] = np.sqrt((2 * k - 1) / 2) * eval_legendre(k - 1, t)
    return values, derivs


def _mesh(problem: Interval1DProblem) -> np.ndarray:
    return np.linspace(problem.a, 0.0, problem.elements + 1)


def _interior_blocks(problem: Interval1DProblem, dofs: DofMap):
    """Global stiffness, eps-weighted mass and load vector of the interior"""
    n = dofs.size
    K = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    f = np.zeros(n, dtype=complex)
    t, w = leggauss(problem.order + 2)
    phi, dphi = shape_functions(problem.order, t)
    nodes = _mesh(problem)
    eps = problem.eps_per_element
    for e in range(problem.elements):
        h = nodes[e + 1] - nodes[e]
        idx = dofs.element(e)
        K[np.ix_(idx, idx)] += (dphi * w) @ dphi.T * (2.0 / h)
        M[np.ix_(idx, idx)] += eps[e] * (phi * w) @ phi.T * (h / 2.0)
        if problem.source is not None:
            x = nodes[e] + 0.5 * h * (t + 1.0)
            f[idx] += phi @ (w * np.asarray(problem.source(x), dtype=complex)) * (h / 2.0)
    return K, M, f


def exterior_blocks(N: int, params: MoebiusParams) -> Tuple[np.ndarray, np.ndarray]:
    """S^H = B(psi_j, psi_k) and M^H = B(Psi_j, Psi_k) on j, k = -1..N"""
    S = radial_form_matrix(N, params, RadialFamily.PSI_PRIME).entries
    M = radial_form_matrix(N, params, RadialFamily.PSI).entries
    return S, M


# =================================================================
# ASSEMBLY
# =================================================================

@dataclass(frozen=True)
class System1D:
    """Pencil S - kappa^2 M of a 1D problem plus load and numbering"""
    stiffness: np.ndarray
    mass: np.ndarray
    rhs: np.ndarray
    dofs: DofMap
    boundary_term: complex = 0.0

    def matrix(self, kappa: complex) -> np.ndarray:
        A = self.stiffness - kappa ** 2 * self.mass
        A[self.dofs.trace, self.dofs.trace] += self.boundary_term
        return A


def _pencil(problem: Interval1DProblem) -> System1D:
    hardy = problem.exterior == ExteriorKind.HARDY
    dofs = DofMap(problem.elements, problem.order, problem.N, hardy)
    K, M, f = _interior_blocks(problem, dofs)
    boundary_term = 0.0
    if hardy:
        S_ext, M_ext = exterior_blocks(problem.N, problem.params)
        ext = dofs.hardy_dofs()
        K[np.ix_(ext, ext)] += S_ext
        M[np.ix_(ext, ext)] += M_ext
    else:
        boundary_term = -1j * problem.kappa
    if problem.boundary == BoundaryKind.NEUMANN:
        f[0] -= problem.boundary_value
    return System1D(K, M, f, dofs, boundary_term)


def assemble_1d(problem: Interval1DProblem) -> Tuple[np.ndarray, np.ndarray, DofMap]:
    """
    System matrix, right-hand side and DOF map at the problem's kappa.

    A Dirichlet condition at x = a replaces row and column 0 by the identity
    after lifting, which keeps the matrix symmetric.
    """
    system = _pencil(problem)
    A = system.matrix(problem.kappa)
    rhs = system.rhs.copy()
    if problem.boundary == BoundaryKind.DIRICHLET:
        value = complex(problem.boundary_value)
        rhs -= A[:, 0] * value
        A[0, :] = 0.0
        A[:, 0] = 0.0
        A[0, 0] = 1.0
        rhs[0] = value
    logger.debug("assembled_1d", size=A.shape[0], exterior=problem.exterior.value)
    return A, rhs, system.dofs


# =================================================================
# DTN
# =================================================================

def dtn_1d(kappa: complex, kappa0: complex, N: int) -> complex:
    """Schur complement of S^H - kappa^2 M^H onto the boundary DOF Psi_{-1}"""
    kappa = complex(kappa)
    if kappa.real <= 0:
        raise ProblemSetupError(f"kappa must have positive real part, got {kappa}")
    S, M = exterior_blocks(N, MoebiusParams(kappa0))
    A = S - kappa ** 2 * M
    try:
        inner = factorize(A[1:, 1:])
    except SingularMatrixError as exc:
        raise DtNSingularError(f"kappa^2 = {kappa ** 2} is an eigenvalue of the Hardy block: {exc}")
    return complex(A[0, 0] - A[0, 1:] @ inner.solve(A[1:, 0]))


# =================================================================
# SCATTERING
# =================================================================

@dataclass(frozen=True)
class ScatteringResult:
    """Solution coefficients and errors against exp(i kappa x)"""
    coefficients: np.ndarray
    dofs: DofMap
    l2_error: float
    h1_error: float
    hardy_tail: float
    trace_value: complex


def evaluate_interior(problem: Interval1DProblem, coefficients: np.ndarray,
                      points_per_element: int = 8) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, values and derivatives of an interior FE function"""
    dofs = DofMap(problem.elements, problem.order, problem.N,
                  problem.exterior == ExteriorKind.HARDY)
    t = np.linspace(-1.0, 1.0, points_per_element)
    phi, dphi = shape_functions(problem.order, t)
    nodes = _mesh(problem)
    xs, us, dus = [], [], []
    for e in range(problem.elements):
        h = nodes[e + 1] - nodes[e]
        c = coefficients[dofs.element(e)]
        xs.append(nodes[e] + 0.5 * h * (t + 1.0))
        us.append(c @ phi)
        dus.append(c @ dphi * (2.0 / h))
    return np.concatenate(xs), np.concatenate(us), np.concatenate(dus)


def _interior_errors(problem: Interval1DProblem, coefficients: np.ndarray,
                     exact: Callable, exact_dx: Callable) -> Tuple[float, float]:
    dofs = DofMap(problem.elements, problem.order, problem.N,
                  problem.exterior == ExteriorKind.HARDY)
    t, w = leggauss(problem.order + 6)
    phi, dphi = shape_functions(problem.order, t)
    nodes = _mesh(problem)
    l2 = h1 = 0.0
    for e in range(problem.elements):
        h = nodes[e + 1] - nodes[e]
        x = nodes[e] + 0.5 * h * (t + 1.0)
        c = coefficients[dofs.element(e)]
        err = c @ phi - exact(x)
        derr = c @ dphi * (2.0 / h) - exact_dx(x)
        l2 += float(np.sum(w * np.abs(err) ** 2)) * h / 2.0
        h1 += float(np.sum(w * np.abs(derr) ** 2)) * h / 2.0
    return float(np.sqrt(l2)), float(np.sqrt(l2 + h1))


def tail_fraction(hardy_coefficients: np.ndarray) -> float:
    """Share of |x|^2 carried by the last two Hardy coefficients"""
    c = np.asarray(hardy_coefficients)
    total = float(np.sum(np.abs(c) ** 2))
    if c.size < 4 or total == 0:
        return 0.0
    return float(np.sum(np.abs(c[-2:]) ** 2)) / total


def solve_scattering_1d(problem: Interval1DProblem) -> ScatteringResult:
    """
    Solve with eps = 1 and Dirichlet data u(a) = exp(i kappa a), so that the
    exact solution is exp(i kappa x).
    """
    if problem.kappa.real <= 0:
        raise ProblemSetupError(f"scattering needs Re kappa > 0, got {problem.kappa}")
    if np.any(problem.eps_per_element != 1.0) or problem.boundary != BoundaryKind.DIRICHLET:
        raise ProblemSetupError("manufactured scattering needs eps = 1 and a Dirichlet end")
    kappa = problem.kappa
    data = np.exp(1j * kappa * problem.a)
    if problem.boundary_value != data:
        problem = replace(problem, boundary_value=data)
    A, rhs, dofs = assemble_1d(problem)
    x = factorize(A).solve(rhs)
    l2, h1 = _interior_errors(problem, x, lambda s: np.exp(1j * kappa * s),
                              lambda s: 1j * kappa * np.exp(1j * kappa * s))
    hardy = x[dofs.hardy_dofs()]
    tail = float(np.sqrt(np.sum(np.abs(hardy[-2:]) ** 2))) if dofs.hardy else 0.0
    logger.info("scattering_solved", N=problem.N, order=problem.order, l2_error=l2, h1_error=h1)
    return ScatteringResult(x, dofs, l2, h1, tail, complex(x[dofs.trace]))


# =================================================================
# RESONANCES
# =================================================================

def slab_reference(eps_int: float, m: int, length: float = 1.0) -> complex:
    """
    Resonance m of a slab of length L with Neumann end:
    tan(n kappa L) = -i/n, n = sqrt(eps_int), so kappa = (m pi - i artanh(1/n)) / (n L).
    """
    if eps_int <= 1:
        raise ProblemSetupError(f"slab resonances need eps_int > 1, got {eps_int}")
    n = np.sqrt(eps_int)
    return complex((m * np.pi - 1j * np.arctanh(1.0 / n)) / (n * length))


def filter_spurious(spectrum: Spectrum, hardy_dofs: np.ndarray,
                    tail_threshold: float = 0.5) -> Spectrum:
    """Drop pairs whose Hardy coefficients put more than tail_threshold of their energy in the last two"""
    if spectrum.vectors is None or len(hardy_dofs) < 4:
        return spectrum
    fractions = np.array([tail_fraction(v[hardy_dofs]) for v in spectrum.vectors.T])
    keep = fractions <= tail_threshold
    if not keep.all():
        logger.warning("spurious_modes_filtered", count=int(np.count_nonzero(~keep)),
                       fractions=[float(f) for f in fractions[~keep]])
    return spectrum.select(keep)


def resonances_slab(eps_int: float = 4.0, kappa0: complex = 2 - 1j, N: int = 20,
                    order: int = 10, k: int = 6, shift: Optional[complex] = None,
                    elements: int = 4, tol: float = 1e-10,
                    tail_threshold: float = 0.5) -> Spectrum:
    """
    Resonances of [-1, 0] with eps_int inside, Neumann at -1, Hardy exterior.

    The default shift sits between the first two closed-form resonances in the
    kappa^2 plane. Pairs with Re kappa <= 0 are dropped.
    """
    problem = Interval1DProblem(kappa=1.0, kappa0=kappa0, N=N, a=-1.0, elements=elements,
                                order=order, eps=eps_int, boundary=BoundaryKind.NEUMANN)
    system = _pencil(problem)
    if shift is None:
        shift = 0.5 * (slab_reference(eps_int, 1) ** 2 + slab_reference(eps_int, 2) ** 2)
    k = min(k, system.dofs.size)
    spectrum = shift_invert_eig(system.stiffness, system.mass, shift, k, tol=tol)
    spectrum = filter_spurious(spectrum, system.dofs.hardy_dofs(), tail_threshold)
    spectrum = spectrum.select(spectrum.kappa.real > 0)
    logger.info("slab_resonances", count=len(spectrum), kappa=[str(x) for x in spectrum.kappa])
    return spectrum.with_multiplicity(1)


def nearest(spectrum: Spectrum, target: complex) -> Tuple[int, complex]:
    """Index and value of the computed kappa closest to target"""
    if len(spectrum) == 0:
        raise ProblemSetupError("spectrum is empty")
    i = int(np.argmin(np.abs(spectrum.kappa - target)))
    return i, complex(spectrum.kappa[i])


__all__ = [
    'ProblemSetupError', 'DtNSingularError', 'BoundaryKind', 'ExteriorKind',
    'Interval1DProblem', 'DofMap', 'System1D', 'ScatteringResult', 'shape_functions',
    'exterior_blocks', 'assemble_1d', 'dtn_1d', 'evaluate_interior', 'tail_fraction',
    'solve_scattering_1d', 'slab_reference', 'filter_spurious', 'resonances_slab', 'nearest',
]
