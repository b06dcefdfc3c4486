"""
The rotation unitaries W_m and the blocked conjugation kernel.

W_1 is the 4x4 unitary rotating the middle two coordinates by 45 degrees; W_m
(acting at level m+1) is the direct sum of 2^(m-1) copies of W_1. Conjugation
by W_m never forms the dense product: the input is cut into 4x4 blocks and
each block is conjugated by W_1, O(N^2) work in two tensor contractions.
"""

import logging
from typing import Optional

import numpy as np

from src import dyadic_core
from src.errors import DomainError, LevelMismatchError
from src.schemas import DiagonalVector, MatrixAtLevel

logger = logging.getLogger(__name__)

INV_SQRT2 = 1.0 / np.sqrt(2.0)

_W1 = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, INV_SQRT2, -INV_SQRT2, 0.0],
        [0.0, INV_SQRT2, INV_SQRT2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ],
    dtype=np.complex128,
)


def _check_index(m: int) -> None:
    if m < 1:
        raise DomainError(f"Walsh index must be >= 1, got {m}")


def w1() -> MatrixAtLevel:
    """The displayed 4x4 rotation W_1 (level 2)."""
    return MatrixAtLevel(level=2, entries=_W1.copy())


def w(m: int, max_level: Optional[int] = None) -> MatrixAtLevel:
    """Dense W_m = direct sum of 2^(m-1) copies of W_1, at level m+1."""
    _check_index(m)
    dyadic_core.check_level(m + 1, max_level)
    return MatrixAtLevel(level=m + 1, entries=np.kron(np.eye(2 ** (m - 1)), _W1))


def conjugate_by_w(X: MatrixAtLevel, m: int, w1_block: Optional[np.ndarray] = None) -> MatrixAtLevel:
    """
    Return W_m X W_m* computed blockwise.

    X is cut into 4x4 blocks X_IJ and each output block is W_1 X_IJ W_1*.
    `w1_block` substitutes another realization of W_1 (the exact one for
    object arrays).
    """
    _check_index(m)
    if X.level != m + 1:
        raise LevelMismatchError(f"W_{m} acts at level {m + 1}, got a level-{X.level} matrix")
    block = _W1 if w1_block is None else w1_block
    n = X.dim // 4
    blocks = X.entries.reshape(n, 4, n, 4)
    # axes (c, I, J, d) after both contractions
    left = np.tensordot(block, blocks, axes=([1], [1]))
    rotated = np.tensordot(left, block.conj().T, axes=([3], [0]))
    out = rotated.transpose(1, 0, 2, 3).reshape(X.dim, X.dim)
    return MatrixAtLevel(level=X.level, entries=out)


def dense_conjugate(X: MatrixAtLevel, m: int) -> MatrixAtLevel:
    """Reference W_m X W_m* by dense products (tests and timing baselines only)."""
    W = w(m).entries
    return MatrixAtLevel(level=X.level, entries=W @ X.entries @ W.conj().T)


def diag_after_w(D: DiagonalVector) -> DiagonalVector:
    """
    Diagonal of W X W* for diagonal X.

    In every group 4h-3..4h the outer positions are kept and the two middle
    positions are replaced by their mean.
    """
    if D.level < 2:
        raise LevelMismatchError(f"diagonal mixing needs level >= 2, got {D.level}")
    groups = D.values.reshape(-1, 4).copy()
    mean = (groups[:, 1] + groups[:, 2]) / 2
    groups[:, 1] = mean
    groups[:, 2] = mean
    return DiagonalVector(level=D.level, values=groups.reshape(-1))
