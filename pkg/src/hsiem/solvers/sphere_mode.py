"""
HSIEM Sphere Mode Problems
Radial reduction of the exterior of the unit ball to one spherical-harmonic degree

Features:
- Per-mode Hardy matrices with the r^2 weight realized by the D operator
- Resonances with Dirichlet data at r = 1, multiplicity 2n+1
- Mode DtN number against the spherical Hankel reference
- Closed-form resonance oracle from the Hankel polynomial roots
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.special import spherical_jn, spherical_yn

from hsiem.hardy.hardy_core import MoebiusParams, RadialFamily, radial_form_matrix
from hsiem.linalg.dense_eig import SingularMatrixError, Spectrum, factorize, shift_invert_eig
from hsiem.solvers.interval_1d import DtNSingularError, ProblemSetupError, filter_spurious

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ModeProblem:
    """Exterior of the unit ball for the spherical-harmonic degree n"""
    n: int
    kappa0: complex = 1.0
    N: int = 15
    boundary_value: complex = 0.0

    def __post_init__(self):
        if self.n < 0:
            raise ProblemSetupError(f"mode degree must be >= 0, got {self.n}")
        if self.N < 0:
            raise ProblemSetupError(f"Hardy truncation must be >= 0, got {self.N}")
        object.__setattr__(self, "kappa0", complex(self.kappa0))

    @property
    def params(self) -> MoebiusParams:
        return MoebiusParams(self.kappa0)

    @property
    def multiplicity(self) -> int:
        return 2 * self.n + 1


def mode_matrices(mode: ModeProblem, eliminate_boundary: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    S = B(D psi_j, D psi_k) + n(n+1) B(Psi_j, Psi_k) and M = B(D Psi_j, D Psi_k).

    With eliminate_boundary the Psi_{-1} row and column are removed, which is
    the homogeneous Dirichlet condition at r = 1.
    """
    params = mode.params
    S = (radial_form_matrix(mode.N, params, RadialFamily.PSI_PRIME, 1, 1).entries
         + mode.n * (mode.n + 1) * radial_form_matrix(mode.N, params, RadialFamily.PSI).entries)
    M = radial_form_matrix(mode.N, params, RadialFamily.PSI, 1, 1).entries
    if eliminate_boundary:
        return S[1:, 1:], M[1:, 1:]
    return S, M


def hankel_roots(n: int) -> np.ndarray:
    """
    Zeros with positive real part of the spherical Hankel function h_n^(1),
    as roots of sum_k (n+k)!/(k!(n-k)!) (i/2)^k z^(n-k). Empty for n = 0.
    """
    if n < 0:
        raise ProblemSetupError(f"mode degree must be >= 0, got {n}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    coeffs = [factorial(n + k) / (factorial(k) * factorial(n - k)) * (0.5j) ** k
              for k in range(n + 1)]
    roots = np.roots(coeffs)
    roots = roots[roots.real > 1e-10 * np.max(np.abs(roots))]
    return roots[np.argsort(roots.real)]


def hankel_dtn(n: int, kappa: complex) -> complex:
    """-kappa h_n'(kappa) / h_n(kappa): exact boundary term of an outgoing mode at r = 1"""
    h = spherical_jn(n, kappa) + 1j * spherical_yn(n, kappa)
    dh = spherical_jn(n, kappa, derivative=True) + 1j * spherical_yn(n, kappa, derivative=True)
    return complex(-kappa * dh / h)


def mode_dtn(mode: ModeProblem, kappa: complex) -> complex:
    """Schur complement of S - kappa^2 M onto the boundary DOF Psi_{-1}"""
    S, M = mode_matrices(mode, eliminate_boundary=False)
    A = S - complex(kappa) ** 2 * M
    try:
        inner = factorize(A[1:, 1:])
    except SingularMatrixError as exc:
        raise DtNSingularError(f"kappa^2 = {complex(kappa) ** 2} is a mode eigenvalue: {exc}")
    return complex(A[0, 0] - A[0, 1:] @ inner.solve(A[1:, 0]))


def resonances_sphere_mode(mode: ModeProblem, shift: Optional[complex] = None, k: int = 6,
                           tol: float = 1e-10, tail_threshold: float = 0.5) -> Spectrum:
    """
    Resonances kappa of one mode with Re kappa > 0.

    Without a shift one is placed next to the squared Hankel roots; n = 0
    has no resonances and then needs an explicit shift.
    """
    if mode.boundary_value != 0:
        raise ProblemSetupError("resonances need homogeneous Dirichlet data at r = 1")
    if shift is None:
        roots = hankel_roots(mode.n)
        if roots.size == 0:
            raise ProblemSetupError("mode n = 0 has no resonances; pass an explicit shift")
        # off the reference eigenvalue by 10%
        shift = 1.1 * complex(np.mean(roots ** 2))
    S, M = mode_matrices(mode)
    k = min(k, S.shape[0])
    spectrum = shift_invert_eig(S, M, shift, k, tol=tol)
    spectrum = filter_spurious(spectrum, np.arange(S.shape[0]), tail_threshold)
    spectrum = spectrum.select(spectrum.kappa.real > 0)
    logger.info("sphere_mode_resonances", n=mode.n, N=mode.N, count=len(spectrum),
                kappa=[str(x) for x in spectrum.kappa])
    return spectrum.with_multiplicity(mode.multiplicity)


__all__ = [
    'ModeProblem', 'mode_matrices', 'hankel_roots', 'hankel_dtn', 'mode_dtn',
    'resonances_sphere_mode',
]
