"""
HSIEM Convergence Studies
Error tables over the Hardy truncation or the interior order
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import pandas as pd
import structlog

from hsiem.solvers.interval_1d import (
    Interval1DProblem, dtn_1d, nearest, resonances_slab, slab_reference, solve_scattering_1d,
)
from hsiem.solvers.sphere_mode import ModeProblem, hankel_roots, resonances_sphere_mode
from hsiem.utils.hsiem_utils import hsiem_utils

logger = structlog.get_logger(__name__)

ROUNDOFF = 1e-13


class ConvergenceCase(Enum):
    """Quantities whose error is tabulated"""
    DTN = "dtn"
    SCATTER1D = "scatter1d"
    SLAB = "slab"
    SPHERE = "sphere"


class SweepParameter(Enum):
    """Discretization parameter varied in a study"""
    N = "N"
    ORDER = "order"


@dataclass(frozen=True)
class StudyConfig:
    """Fixed data of a study; the swept parameter overrides N or order"""
    kappa: Optional[complex] = None
    kappa0: complex = 1.0
    N: int = 10
    order: int = 10
    elements: int = 4
    eps_int: float = 4.0
    mode: int = 2
    resonance: int = 1


def _dtn_error(cfg: StudyConfig, N: int, order: int) -> Tuple[float, float]:
    kappa = cfg.kappa if cfg.kappa is not None else 2 * cfg.kappa0
    err = abs(dtn_1d(kappa, cfg.kappa0, N) + 1j * kappa)
    return err, ROUNDOFF * max(1.0, abs(kappa))


def _scatter_error(cfg: StudyConfig, N: int, order: int) -> Tuple[float, float]:
    kappa = cfg.kappa if cfg.kappa is not None else 2 * cfg.kappa0
    result = solve_scattering_1d(Interval1DProblem(
        kappa=kappa, kappa0=cfg.kappa0, N=N, elements=cfg.elements, order=order))
    return result.h1_error, ROUNDOFF


def _slab_error(cfg: StudyConfig, N: int, order: int) -> Tuple[float, float]:
    ref = slab_reference(cfg.eps_int, cfg.resonance)
    spectrum = resonances_slab(cfg.eps_int, cfg.kappa0, N, order, elements=cfg.elements)
    _, kappa = nearest(spectrum, ref)
    return abs(kappa - ref) / abs(ref), ROUNDOFF


def _sphere_error(cfg: StudyConfig, N: int, order: int) -> Tuple[float, float]:
    roots = hankel_roots(cfg.mode)
    if roots.size == 0:
        raise ValueError("sphere studies need a mode with resonances (n >= 1)")
    ref = roots[0]
    spectrum = resonances_sphere_mode(ModeProblem(cfg.mode, cfg.kappa0, N))
    _, kappa = nearest(spectrum, ref)
    return abs(kappa - ref) / abs(ref), ROUNDOFF


_ERRORS = {
    ConvergenceCase.DTN: _dtn_error,
    ConvergenceCase.SCATTER1D: _scatter_error,
    ConvergenceCase.SLAB: _slab_error,
    ConvergenceCase.SPHERE: _sphere_error,
}


def monotone_flags(errors: List[float], floor: float) -> List[bool]:
    """True where the error did not grow, or both errors sit below the round-off floor"""
    if not errors:
        return []
    flags = [True]
    for prev, cur in zip(errors, errors[1:]):
        flags.append(cur <= prev or max(cur, prev) <= floor)
    return flags


def convergence_study(case: ConvergenceCase, values: Iterable[int],
                      config: Optional[StudyConfig] = None,
                      sweep: SweepParameter = SweepParameter.N,
                      timing: bool = False) -> pd.DataFrame:
    """
    One row per swept value with columns parameter, error, monotone and,
    when timing is set, runtime in seconds.
    """
    case = ConvergenceCase(case)
    sweep = SweepParameter(sweep)
    config = config or StudyConfig()
    values = [int(v) for v in values]
    error_fn = _ERRORS[case]

    def run(value: int):
        N, order = (value, config.order) if sweep == SweepParameter.N else (config.N, value)
        start = time.perf_counter()
        error, floor = error_fn(config, N, order)
        return float(error), floor, time.perf_counter() - start

    results = hsiem_utils.map_ordered(run, values)
    errors = [r[0] for r in results]
    floor = max((r[1] for r in results), default=ROUNDOFF)
    frame = pd.DataFrame({
        "parameter": values,
        "error": errors,
        "monotone": monotone_flags(errors, floor),
    })
    if timing:
        frame["runtime"] = [r[2] for r in results]
    logger.info("convergence_study", case=case.value, sweep=sweep.value,
                last_error=errors[-1] if errors else None,
                monotone=bool(frame["monotone"].all()))
    return frame


__all__ = [
    'ROUNDOFF', 'ConvergenceCase', 'SweepParameter', 'StudyConfig', 'monotone_flags',
    'convergence_study',
]
