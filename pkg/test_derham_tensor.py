"""
HSIEM De Rham Tensor Complex Test Suite

Features tested:
- Dimension formulas and the Euler characteristic
- Vanishing compositions and rank conditions of the local complex
- Independence of the chain matrices from kappa0
- Entity classification of the degrees of freedom
"""

import numpy as np
import pytest

from hsiem.derham.derham_tensor import (
    ENTITIES, build_complex, complex_dims, dof_classification, sweep_exactness,
    verify_exactness,
)
from hsiem.hardy.hardy_core import MoebiusParams


def test_dims_example():
    cx = build_complex(3, 4, MoebiusParams(2 + 1j))
    assert cx.dims == (60, 132, 90, 18)
    assert cx.gradient.shape == (132, 60)
    assert cx.curl.shape == (90, 132)
    assert cx.divergence.shape == (18, 90)
    assert len(cx.orderings["V"]) == 132


def test_lowest_order_has_empty_l2_space():
    cx = build_complex(1, 0)
    assert cx.dims[3] == 0
    assert cx.divergence.shape == (0, cx.dims[2])
    assert verify_exactness(cx).passed


@pytest.mark.parametrize("p", range(1, 9))
@pytest.mark.parametrize("N", range(0, 7))
def test_euler_characteristic(p, N):
    w, v, q, x = complex_dims(p, N)
    assert w - v + q - x == 0


@pytest.mark.parametrize("p", range(1, 6))
@pytest.mark.parametrize("N", range(0, 5))
def test_local_exactness(p, N):
    cx = build_complex(p, N)
    report = verify_exactness(cx)
    assert report.passed
    assert max(report.composition_norms) <= 1e-12
    assert report.kernel_dims[0] == 0
    assert report.ranks[2] == cx.dims[3]


def test_divergence_is_onto():
    report = verify_exactness(build_complex(3, 4))
    assert report.ranks[2] == 18
    assert report.kernel_dims[0] == 0


def test_chain_is_independent_of_kappa0():
    a = build_complex(3, 2, MoebiusParams(1))
    b = build_complex(3, 2, MoebiusParams(3 + 2j))
    for left, right in zip(a.chain, b.chain):
        np.testing.assert_array_equal(left, right)


def test_broken_chain_is_reported():
    cx = build_complex(2, 1)
    first, second, third = cx.chain
    bad = first.copy()
    bad[-1, 0] += 1.0
    broken = type(cx)(cx.p, cx.N, cx.kappa0, cx.dims, (bad, second, third), cx.orderings)
    assert not verify_exactness(broken).passed


def test_block_slices():
    cx = build_complex(2, 1)
    slices = cx.block_slices("V")
    assert slices["xi"] == slice(0, 18)
    assert slices["tangential"] == slice(18, 36)


def test_sweep_preserves_order():
    reports = sweep_exactness([1, 2], [0, 1])
    assert [(r.p, r.N) for r in reports] == [(1, 0), (1, 1), (2, 0), (2, 1)]
    assert all(r.passed for r in reports)


@pytest.mark.parametrize("p", range(2, 7))
@pytest.mark.parametrize("N", range(0, 4))
def test_dof_classification_sums(p, N):
    table = dof_classification(p, N)
    for space, dim in zip("WVQX", complex_dims(p, N)):
        assert set(table[space]) == set(ENTITIES)
        assert sum(table[space].values()) == dim


def test_dof_classification_example():
    table = dof_classification(3, 4)
    assert table["W"]["vertex"] == 3
    assert table["W"]["ray"] == 15
    assert table["X"]["segment"] == 18
    with pytest.raises(ValueError):
        dof_classification(1, 2)
