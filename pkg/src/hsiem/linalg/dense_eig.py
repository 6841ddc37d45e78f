"""
HSIEM Dense Linear Algebra
LU solves and shift-invert Arnoldi for complex-symmetric pencils

Features:
- Partial pivoting LU with pivot-based singularity detection
- LAPACK condition estimate with ill-conditioning warnings
- Shift-invert Arnoldi on (S - sigma M)^-1 M with two-pass reorthogonalization
- Explicit restarts and happy-breakdown detection
- Spectrum records with kappa, kappa^2, residuals and quality factors
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import structlog
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor
from scipy.linalg import lu_solve as _lu_solve

from hsiem.utils.hsiem_utils import HSIEMError, hsiem_utils

logger = structlog.get_logger(__name__)

COND_WARN_LIMIT = 1e8


class SingularMatrixError(HSIEMError):
    """Raised when an LU factorization hits a negligible pivot"""

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class ShiftOnEigenvalueError(HSIEMError):
    """Raised when the shift makes S - sigma M singular"""
    pass


class IllConditionedWarning(UserWarning):
    """Issued when the estimated condition number exceeds the warning limit"""
    pass


@dataclass(frozen=True)
class LUFactor:
    """Dense LU factorization with its reciprocal condition estimate"""
    lu: np.ndarray
    piv: np.ndarray
    rcond: float

    @property
    def condition(self) -> float:
        return float("inf") if self.rcond == 0 else 1.0 / self.rcond

    def solve(self, b: np.ndarray) -> np.ndarray:
        return _lu_solve((self.lu, self.piv), b, check_finite=False)


def factorize(A: np.ndarray, warn_cond: float = COND_WARN_LIMIT) -> LUFactor:
    """LU with partial pivoting; singular pivots raise, large condition numbers warn"""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        raise ValueError("matrix must not be empty")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=True)

    pivots = np.abs(np.diag(lu))
    u_max = float(np.max(np.abs(np.triu(lu))))
    threshold = n * np.finfo(float).eps * u_max
    small = np.flatnonzero(pivots <= threshold)
    if u_max == 0 or small.size:
        index = int(small[0]) if small.size else 0
        raise SingularMatrixError(
            f"matrix is singular to machine precision: pivot {index} is {pivots[index]:.3e} "
            f"(threshold {threshold:.3e})", index)

    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(A, 1), norm="1")
    rcond = float(rcond)
    factor = LUFactor(lu, piv, rcond)
    if factor.condition > warn_cond:
        warnings.warn(IllConditionedWarning(
            f"condition estimate {factor.condition:.3e} exceeds {warn_cond:.1e}"), stacklevel=3)
        logger.warning("ill_conditioned", condition=factor.condition, size=n)
    return factor


def lu_solve(A: np.ndarray, b: np.ndarray, warn_cond: float = COND_WARN_LIMIT) -> np.ndarray:
    """Solve A x = b (b a vector or a matrix of right-hand sides)"""
    factor = factorize(A, warn_cond)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != factor.lu.shape[0]:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix has {factor.lu.shape[0]}")
    return factor.solve(b)


# =================================================================
# SPECTRUM
# =================================================================

def kappa_from_square(kappa_sq: np.ndarray) -> np.ndarray:
    """Principal square root; purely imaginary roots are taken with Im <= 0"""
    kappa = np.sqrt(np.asarray(kappa_sq, dtype=complex))
    tie = np.abs(kappa.real) <= 1e-14 * np.maximum(np.abs(kappa), 1e-300)
    return np.where(tie, -1j * np.abs(kappa.imag), kappa)


def quality_factor(kappa: np.ndarray) -> np.ndarray:
    """Re kappa / |Im kappa|, infinite for real kappa"""
    kappa = np.asarray(kappa, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(kappa.imag == 0, np.inf, kappa.real / np.abs(kappa.imag))


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs of S x = kappa^2 M x nearest a shift"""
    kappa: np.ndarray
    kappa_sq: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    shift: complex
    tol: float
    restarts: int = 0
    multiplicity: Optional[np.ndarray] = None
    vectors: Optional[np.ndarray] = field(default=None, repr=False)
    filtered: int = 0

    def __post_init__(self):
        if self.multiplicity is None:
            object.__setattr__(self, "multiplicity", np.ones(len(self.kappa), dtype=int))

    @property
    def quality(self) -> np.ndarray:
        return quality_factor(self.kappa)

    def __len__(self) -> int:
        return len(self.kappa)

    def select(self, mask: np.ndarray) -> "Spectrum":
        """Keep the pairs where mask is true; dropped pairs count as filtered"""
        mask = np.asarray(mask, dtype=bool)
        return replace(
            self,
            kappa=self.kappa[mask], kappa_sq=self.kappa_sq[mask],
            residuals=self.residuals[mask], converged=self.converged[mask],
            multiplicity=self.multiplicity[mask],
            vectors=None if self.vectors is None else self.vectors[:, mask],
            filtered=self.filtered + int(np.count_nonzero(~mask)),
        )

    def with_multiplicity(self, value: int) -> "Spectrum":
        return replace(self, multiplicity=np.full(len(self), value, dtype=int))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "index": np.arange(len(self)),
            "kappa_re": self.kappa.real,
            "kappa_im": self.kappa.imag,
            "kappa_sq_re": self.kappa_sq.real,
            "kappa_sq_im": self.kappa_sq.imag,
            "residual": self.residuals,
            "converged": self.converged.astype(bool),
            "quality": self.quality,
            "multiplicity": self.multiplicity,
        })

    def to_dict(self) -> Dict[str, Any]:
        fmt = hsiem_utils.format_complex
        quality = [None if not np.isfinite(q) else float(q) for q in self.quality]
        return {
            "shift": fmt(self.shift),
            "tol": self.tol,
            "restarts": self.restarts,
            "filtered": self.filtered,
            "eigenvalues": [
                {
                    "kappa": fmt(k), "kappa_sq": fmt(k2), "residual": float(r),
                    "converged": bool(c), "quality": q, "multiplicity": int(m),
                }
                for k, k2, r, c, q, m in zip(self.kappa, self.kappa_sq, self.residuals,
                                              self.converged, quality, self.multiplicity)
            ],
        }


# =================================================================
# SHIFT-INVERT ARNOLDI
# =================================================================

def _arnoldi(apply_op, v0: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """m Arnoldi steps; returns V, H and the subspace size reached"""
    n = v0.shape[0]
    V = np.zeros((n, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = v0 / np.linalg.norm(v0)
    for j in range(m):
        w = apply_op(V[:, j])
        w_norm = np.linalg.norm(w)
        h = V[:, :j + 1].conj().T @ w
        w = w - V[:, :j + 1] @ h
        # second pass keeps the basis orthogonal to working precision
        h2 = V[:, :j + 1].conj().T @ w
        w = w - V[:, :j + 1] @ h2
        H[:j + 1, j] = h + h2
        beta = np.linalg.norm(w)
        H[j + 1, j] = beta
        if beta <= 1e-13 * max(w_norm, np.finfo(float).tiny):
            return V[:, :j + 1], H[:j + 1, :j + 1], j + 1
        V[:, j + 1] = w / beta
    return V[:, :m], H[:m, :m], m


def _residuals(S, M, lam, X, s_norm, m_norm) -> np.ndarray:
    R = S @ X - (M @ X) * lam[None, :]
    scale = (s_norm + np.abs(lam) * m_norm) * np.linalg.norm(X, axis=0)
    return np.linalg.norm(R, axis=0) / scale


def shift_invert_eig(S: np.ndarray, M: np.ndarray, shift: complex, k: int,
                     tol: float = 1e-10, max_restarts: int = 10, seed: int = 0,
                     krylov_dim: Optional[int] = None) -> Spectrum:
    """
    k eigenvalues kappa^2 of S x = kappa^2 M x closest to the shift.

    Arnoldi runs on (S - shift M)^-1 M, whose dominant Ritz values theta give
    kappa^2 = shift + 1/theta. Pairs are ordered by distance to the shift.
    """
    S = np.asarray(S, dtype=complex)
    M = np.asarray(M, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape != M.shape:
        raise ValueError(f"S and M must be square of equal size, got {S.shape} and {M.shape}")
    n = S.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"requested {k} eigenvalues from a problem of size {n}")
    shift = complex(shift)

    try:
        factor = factorize(S - shift * M)
    except SingularMatrixError as exc:
        raise ShiftOnEigenvalueError(f"shift {shift} is (numerically) an eigenvalue: {exc}")

    def apply_op(v):
        return factor.solve(M @ v)

    m = krylov_dim or min(n, max(4 * k + 20, 80))
    m = min(max(m, k), n)
    s_norm = np.linalg.norm(S, 1)
    m_norm = np.linalg.norm(M, 1)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)

    restarts = 0
    while True:
        V, H, size = _arnoldi(apply_op, v0, m)
        theta, Y = np.linalg.eig(H)
        finite = np.abs(theta) > 1e-14 * max(float(np.max(np.abs(theta))), np.finfo(float).tiny)
        order = [i for i in np.argsort(-np.abs(theta)) if finite[i]][:k]
        lam = shift + 1.0 / theta[order]
        X = V @ Y[:, order]
        X = X / np.linalg.norm(X, axis=0)
        res = _residuals(S, M, lam, X, s_norm, m_norm)
        logger.debug("arnoldi_cycle", restart=restarts, size=size, worst=float(np.max(res, initial=0)))
        if np.all(res <= tol) or size < m or restarts >= max_restarts:
            break
        restarts += 1
        v0 = X[:, res > tol].sum(axis=1) + X.sum(axis=1)
        if np.linalg.norm(v0) == 0:
            v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)

    ranking = np.argsort(np.abs(lam - shift), kind="stable")
    lam, X, res = lam[ranking], X[:, ranking], res[ranking]
    converged = res <= tol
    if len(lam) < k:
        logger.warning("fewer_finite_eigenvalues", requested=k, found=len(lam))
    if not np.all(converged):
        logger.warning("eigenpairs_not_converged", shift=str(shift),
                       unconverged=int(np.count_nonzero(~converged)), restarts=restarts)
    return Spectrum(kappa=kappa_from_square(lam), kappa_sq=lam, residuals=res, converged=converged,
                    shift=shift, tol=tol, restarts=restarts, vectors=X)


__all__ = [
    'COND_WARN_LIMIT', 'SingularMatrixError', 'ShiftOnEigenvalueError', 'IllConditionedWarning',
    'LUFactor', 'factorize', 'lu_solve', 'kappa_from_square', 'quality_factor', 'Spectrum',
    'shift_invert_eig',
]
