"""
HSIEM Convergence Study Test Suite

Features tested:
- DtN, slab and sphere error tables reach their targets
- Monotonicity flags with a round-off floor
- Optional runtime column and deterministic output
"""

import pytest

from hsiem.solvers.convergence import (
    ConvergenceCase, StudyConfig, SweepParameter, convergence_study, monotone_flags,
)


def test_dtn_case():
    table = convergence_study(ConvergenceCase.DTN, range(0, 21), StudyConfig(kappa0=1.0))
    assert list(table.columns) == ["parameter", "error", "monotone"]
    assert list(table["parameter"]) == list(range(21))
    assert table["error"].iloc[-1] < 1e-8
    assert table["monotone"].iloc[5:].all()


def test_slab_case():
    table = convergence_study("slab", [5, 10, 15], StudyConfig(kappa0=2 - 1j, order=10))
    assert table["error"].iloc[-1] < 1e-8
    assert table["error"].iloc[0] > table["error"].iloc[-1]


def test_sphere_case():
    table = convergence_study(ConvergenceCase.SPHERE, [15], StudyConfig(kappa0=5 - 1j, mode=2))
    assert table["error"].iloc[0] < 1e-6


def test_sphere_case_needs_resonant_mode():
    with pytest.raises(ValueError):
        convergence_study(ConvergenceCase.SPHERE, [5], StudyConfig(mode=0))


def test_order_sweep_with_exact_exterior():
    table = convergence_study(ConvergenceCase.SCATTER1D, [2, 4, 6, 8],
                              StudyConfig(kappa=1.0, kappa0=1.0, N=4, elements=2),
                              sweep=SweepParameter.ORDER)
    errors = list(table["error"])
    assert errors == sorted(errors, reverse=True)
    assert table["monotone"].all()


def test_runtime_column_on_request():
    table = convergence_study(ConvergenceCase.DTN, [1, 2], timing=True)
    assert list(table.columns) == ["parameter", "error", "monotone", "runtime"]
    assert (table["runtime"] >= 0).all()


def test_repeated_study_is_identical():
    first = convergence_study(ConvergenceCase.DTN, range(8), StudyConfig(kappa0=1 + 0.5j))
    second = convergence_study(ConvergenceCase.DTN, range(8), StudyConfig(kappa0=1 + 0.5j))
    assert first.equals(second)


def test_monotone_flags():
    assert monotone_flags([1.0, 0.5, 0.7, 0.1], 1e-13) == [True, True, False, True]
    assert monotone_flags([1e-15, 3e-15], 1e-13) == [True, True]
    assert monotone_flags([], 1e-13) == []
