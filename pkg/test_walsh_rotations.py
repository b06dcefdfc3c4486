"""
Tests for W_1, W_m and the blocked conjugation kernel.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src import dyadic_core, walsh_rotations
from src.errors import DomainError, LevelMismatchError, LevelOverflowError
from src.schemas import MatrixAtLevel


def random_matrix(level, rng):
    side = 2 ** level
    X = rng.uniform(-1, 1, (side, side)) + 1j * rng.uniform(-1, 1, (side, side))
    return MatrixAtLevel(level=level, entries=X)


def test_w1_is_the_middle_rotation():
    W = walsh_rotations.w1().entries
    s = 1 / np.sqrt(2)
    assert np.allclose(W[1:3, 1:3], [[s, -s], [s, s]])
    assert W[0, 0] == 1 and W[3, 3] == 1
    assert np.allclose(W @ W.conj().T, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_w_is_a_unitary_direct_sum(m):
    W = walsh_rotations.w(m)
    assert W.level == m + 1
    assert np.allclose(W.entries @ W.entries.conj().T, np.eye(W.dim), atol=1e-14)
    assert np.array_equal(W.entries[:4, :4], walsh_rotations.w1().entries)


@pytest.mark.parametrize("level", [2, 3, 4, 6, 8])
def test_blocked_kernel_matches_dense_product(level):
    rng = np.random.default_rng(level)
    X = random_matrix(level, rng)
    blocked = walsh_rotations.conjugate_by_w(X, level - 1)
    dense = walsh_rotations.dense_conjugate(X, level - 1)
    assert np.max(np.abs(blocked.entries - dense.entries)) <= 1e-12


def test_w1_mixes_diag01_embedding():
    E = dyadic_core.embed(dyadic_core.diag_matrix([0.0, 1.0]))
    out = walsh_rotations.conjugate_by_w(E, 1)
    assert np.allclose(np.diagonal(out.entries).real, [0, 0.5, 0.5, 1], atol=1e-15)


def test_diag_after_w_matches_conjugation():
    rng = np.random.default_rng(3)
    d = rng.uniform(0, 1, 16)
    D = dyadic_core.diag_matrix(d)
    mixed = walsh_rotations.diag_after_w(dyadic_core.diag_compress(D))
    dense = np.diagonal(walsh_rotations.dense_conjugate(D, 3).entries)
    assert np.allclose(mixed.values, dense, atol=1e-15)
    assert mixed.values[1] == mixed.values[2] == (d[1] + d[2]) / 2


def test_argument_errors():
    with pytest.raises(DomainError):
        walsh_rotations.w(0)
    with pytest.raises(LevelMismatchError):
        walsh_rotations.conjugate_by_w(dyadic_core.identity(3), 1)
    with pytest.raises(LevelMismatchError):
        walsh_rotations.diag_after_w(dyadic_core.diag_compress(dyadic_core.identity(1)))
    with pytest.raises(LevelOverflowError):
        walsh_rotations.w(5, max_level=4)


@pytest.mark.slow
def test_blocked_kernel_at_level_11_is_fast():
    X = random_matrix(11, np.random.default_rng(0))
    start = time.perf_counter()
    walsh_rotations.conjugate_by_w(X, 10)
    assert time.perf_counter() - start < 2.0


def _best_time(X, m, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        walsh_rotations.conjugate_by_w(X, m)
        best = min(best, time.perf_counter() - start)
    return best


@pytest.mark.slow
def test_blocked_kernel_scales_with_the_entry_count():
    rng = np.random.default_rng(1)
    t10 = _best_time(random_matrix(10, rng), 9)
    t11 = _best_time(random_matrix(11, rng), 10)
    assert t11 / t10 <= 5.0
