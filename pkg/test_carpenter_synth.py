"""
Tests for prescribed-diagonal projections: the Givens chain, circulants and block targets.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.insert(0, str(Path(__file__).parent))

from src import carpenter_synth, validation
from src.errors import DomainError, InfeasibleTargetError, SynthesisError
from src.schemas import Block, BlockSpec, DiagonalTarget


def test_feasibility():
    assert carpenter_synth.majorization_feasible(DiagonalTarget(d=[0.9, 0.7, 0.3, 0.1]))
    assert carpenter_synth.majorization_feasible(DiagonalTarget(d=[0.0, 0.0]))
    assert not carpenter_synth.majorization_feasible(DiagonalTarget(d=[0.5, 0.6]))
    assert not carpenter_synth.majorization_feasible(DiagonalTarget(d=[1.2, -0.2]))


def test_horn_example():
    target = DiagonalTarget(d=[0.9, 0.7, 0.3, 0.1])
    result = carpenter_synth.horn_projection(target)
    P = result.matrix
    assert result.rotations == 3
    assert result.check.passed
    assert result.check.rank == 2
    assert np.allclose(np.diagonal(P), target.d, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P, P.T)


def test_horn_two_by_two():
    result = carpenter_synth.horn_projection(DiagonalTarget(d=[0.5, 0.5]))
    assert result.rotations == 1
    assert np.allclose(result.matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_horn_diagonal_targets_need_no_rotation():
    result = carpenter_synth.horn_projection(DiagonalTarget(d=[0.0, 1.0, 1.0, 0.0]))
    assert result.rotations == 0
    assert np.array_equal(result.matrix, np.diag([0.0, 1.0, 1.0, 0.0]))


@pytest.mark.parametrize("n", [4, 16, 64])
def test_horn_random_targets(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        target = carpenter_synth.random_feasible_target(n, rng)
        result = carpenter_synth.horn_projection(target)
        assert result.check.passed
        assert result.rotations <= n - 1
        assert result.check.diag_err <= 1e-9


def test_rotation_partner_of_the_largest_value():
    values = {0: 0.8, 1: 1.0, 2: 0.0, 3: 0.2}
    assert carpenter_synth._rotation_pair(values, 0.5, np.array([0.5, 0.5, 0.5])) == (1, 2)


def test_rotation_partner_skips_pairs_that_strand_later_targets():
    values = {0: 1.0, 1: 0.0, 2: 0.45}
    assert carpenter_synth._rotation_pair(values, 0.6, np.array([0.6, 0.25])) == (0, 2)
    with pytest.raises(SynthesisError):
        carpenter_synth._rotation_pair({0: 0.2, 1: 0.1}, 0.5, np.array([0.3]))


@pytest.mark.slow
def test_horn_random_targets_at_256():
    rng = np.random.default_rng(256)
    for n in [4, 16, 64, 256] * 25:
        target = carpenter_synth.random_feasible_target(n, rng)
        result = carpenter_synth.horn_projection(target)
        assert result.check.passed
        assert result.rotations <= n - 1


def test_horn_rejects_infeasible_targets():
    with pytest.raises(InfeasibleTargetError):
        carpenter_synth.horn_projection(DiagonalTarget(d=[0.5, 0.6]))
    with pytest.raises(InfeasibleTargetError):
        carpenter_synth.horn_projection(DiagonalTarget(d=[1.5, -0.5]))


def test_circulant_examples():
    assert np.allclose(carpenter_synth.circulant_projection(2, 1), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    P = carpenter_synth.circulant_projection(4, 2)
    assert np.max(np.abs(np.diagonal(P) - 0.5)) <= 1e-13
    assert np.allclose(P @ P, P, atol=1e-14)
    assert np.allclose(P, P.conj().T)


@pytest.mark.parametrize("n,m", [(8, 3), (16, 0), (16, 16), (32, 7)])
def test_circulant_synthesis_passes_checks(n, m):
    result = carpenter_synth.circulant_synthesis(n, m)
    assert result.check.passed
    assert np.max(np.abs(np.diagonal(result.matrix) - m / n)) <= 1e-13


def test_circulant_argument_errors():
    with pytest.raises(DomainError):
        carpenter_synth.circulant_projection(4, 5)
    with pytest.raises(DomainError):
        carpenter_synth.circulant_projection(0, 0)


def test_circulant_algebra_compresses_to_scalars():
    for n in range(2, 65):
        assert carpenter_synth.orthogonality_check(n)
    with pytest.raises(DomainError):
        carpenter_synth.orthogonality_check(1)
    c = np.random.default_rng(9).standard_normal(8)
    C = carpenter_synth.circulant_matrix(c)
    assert np.all(np.diagonal(C) == c[0])
    assert np.array_equal(C[:, 0], c)


def test_discrete_carpenter_blocks():
    spec = BlockSpec(n=6, blocks=[Block(indices=[1, 2], alpha=0.5), Block(indices=[3, 4, 5, 6], alpha=0.25)])
    result = carpenter_synth.discrete_carpenter(spec)
    assert result.check.passed
    assert result.check.m == 2
    assert np.allclose(np.diagonal(result.matrix).real, [0.5, 0.5, 0.25, 0.25, 0.25, 0.25])
    assert np.all(result.matrix[:2, 2:] == 0)


def test_discrete_carpenter_rejects_fractional_block_mass():
    spec = BlockSpec(n=3, blocks=[Block(indices=[1, 2, 3], alpha=0.5)])
    with pytest.raises(InfeasibleTargetError, match="horn_projection"):
        carpenter_synth.discrete_carpenter(spec)


def test_block_spec_validation():
    with pytest.raises(ValidationError):
        BlockSpec(n=3, blocks=[Block(indices=[1, 2], alpha=0.5), Block(indices=[2, 3], alpha=0.5)])
    with pytest.raises(ValidationError):
        BlockSpec(n=2, blocks=[Block(indices=[3], alpha=1.0)])


def test_dyadic_constant_target():
    approx = carpenter_synth.dyadic_constant_target(1 / np.sqrt(2), 10)
    assert approx.m == 724
    assert approx.value == 724 / 1024
    assert approx.gap == pytest.approx(abs(1 / np.sqrt(2) - 724 / 1024))
    assert carpenter_synth.dyadic_constant_target(1.0, 3).m == 8
    with pytest.raises(DomainError):
        carpenter_synth.dyadic_constant_target(1.5, 3)


def test_require_projection_raises_on_non_projection():
    check = validation.check_projection(np.eye(2) * 0.5, [0.5, 0.5])
    assert not check.passed
    with pytest.raises(SynthesisError):
        validation.require_projection(np.eye(2) * 0.5, [0.5, 0.5])


def test_circulant_diagonal_is_within_rounding_of_the_constant():
    P = carpenter_synth.circulant_projection(32, 7)
    gap = np.abs(np.diagonal(P) - 7 / 32)
    assert np.max(gap) <= 1e-13
    assert np.allclose(P @ P, P, atol=1e-13)
