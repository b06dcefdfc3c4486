"""
Matrix arithmetic on the dyadic tower M_2 -> M_4 -> M_8 -> ...

Levels, the interleaving embedding between consecutive levels, the normalized
trace, the Frobenius and factor 2-norms, and the diagonal compression E_D.
All interfaces speak 1-based indices; storage is 0-based numpy.

Every function accepts the numeric realization (complex128 arrays) and, except
`classify`, the exact realization (object arrays of exact field elements).
"""

import functools
import logging
import operator
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from src import config
from src.errors import IndexOutOfRangeError, LevelMismatchError, LevelOverflowError
from src.schemas import ClassifyFlags, DiagonalVector, MatrixAtLevel, ToleranceConfig

logger = logging.getLogger(__name__)


def check_level(k: int, max_level: Optional[int] = None) -> int:
    """Validate a level against the cap and return it."""
    cap = config.get_max_level() if max_level is None else max_level
    if k < 0:
        raise IndexOutOfRangeError(f"level must be nonnegative, got {k}")
    if k > cap:
        raise LevelOverflowError(f"level {k} exceeds max level {cap}")
    return k


def level_of(side: int) -> int:
    """Level k with 2^k == side; raises for non powers of two."""
    if side < 1 or side & (side - 1):
        raise LevelMismatchError(f"dimension {side} is not a power of two")
    return side.bit_length() - 1


def as_matrix(entries) -> MatrixAtLevel:
    """Wrap a square array whose side is a power of two."""
    arr = np.asarray(entries)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise LevelMismatchError(f"expected a square matrix, got shape {arr.shape}")
    return MatrixAtLevel(level=level_of(arr.shape[0]), entries=arr)


def identity(k: int) -> MatrixAtLevel:
    return MatrixAtLevel(level=check_level(k), entries=np.eye(2 ** k, dtype=np.complex128))


def zeros(k: int) -> MatrixAtLevel:
    n = 2 ** check_level(k)
    return MatrixAtLevel(level=k, entries=np.zeros((n, n), dtype=np.complex128))


def diag_matrix(values) -> MatrixAtLevel:
    """Diagonal matrix with the given 2^k diagonal values."""
    if isinstance(values, DiagonalVector):
        values = values.values
    values = np.asarray(values)
    if values.dtype == object:
        zero = values[0] - values[0]
        out = np.full((values.size, values.size), zero, dtype=object)
        out[np.diag_indices(values.size)] = values
    else:
        out = np.diag(values.astype(np.complex128))
    return MatrixAtLevel(level=level_of(values.size), entries=out)


def matrix_unit(k: int, i: int, j: int) -> MatrixAtLevel:
    """Canonical matrix unit e_ij at level k (1-based)."""
    n = 2 ** check_level(k)
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexOutOfRangeError(f"matrix unit ({i},{j}) outside 1..{n} at level {k}")
    out = np.zeros((n, n), dtype=np.complex128)
    out[i - 1, j - 1] = 1.0
    return MatrixAtLevel(level=k, entries=out)


def _zeros_like(entries: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    if entries.dtype == object:
        zero = entries.flat[0] - entries.flat[0]
        return np.full(shape, zero, dtype=object)
    return np.zeros(shape, dtype=entries.dtype)


def embed(A: MatrixAtLevel, max_level: Optional[int] = None) -> MatrixAtLevel:
    """
    Interleaving embedding of level k into level k+1.

    result(p, q) = A(ceil(p/2), ceil(q/2)) when p = q (mod 2), else 0: every
    scalar entry is doubled across an odd/even index pair, so that
    e^{k+1}_{2i-1,2j-1} + e^{k+1}_{2i,2j} = embed(e^k_{ij}).
    """
    check_level(A.level + 1, max_level)
    n = A.dim
    out = _zeros_like(A.entries, (2 * n, 2 * n))
    out[0::2, 0::2] = A.entries
    out[1::2, 1::2] = A.entries
    return MatrixAtLevel(level=A.level + 1, entries=out)


def embed_to(A: MatrixAtLevel, level: int, max_level: Optional[int] = None) -> MatrixAtLevel:
    """Compose embeddings until `level` is reached."""
    if level < A.level:
        raise LevelMismatchError(f"cannot embed level {A.level} down to level {level}")
    check_level(level, max_level)
    out = A
    while out.level < level:
        out = embed(out, max_level)
    return out


def diag_compress(A: MatrixAtLevel) -> DiagonalVector:
    """E_D: the diagonal of A."""
    return DiagonalVector(level=A.level, values=np.diagonal(A.entries).copy())


def diag_part(A: MatrixAtLevel) -> MatrixAtLevel:
    """E_D(A) as a diagonal matrix."""
    return diag_matrix(np.diagonal(A.entries).copy())


def normalized_trace(A: Union[MatrixAtLevel, DiagonalVector]):
    """tau(A) = (1/N) sum_i A(i,i)."""
    values = A.values if isinstance(A, DiagonalVector) else np.diagonal(A.entries)
    if values.dtype == object:
        return functools.reduce(operator.add, values) * Fraction(1, values.size)
    return complex(values.sum() / values.size)


def fro_sq(entries: np.ndarray):
    """Squared Frobenius norm of a raw array (a QuadExt for exact arrays)."""
    if entries.dtype == object:
        return functools.reduce(operator.add, (z.abs_sq() for z in entries.flat))
    return float(np.vdot(entries, entries).real)


def norms(A: MatrixAtLevel):
    """
    Return (fro_sq, factor_sq) with factor_sq = 2^-k fro_sq.

    The factor 2-norm is the normalized-trace norm tau(x* x)^(1/2).
    """
    fro = fro_sq(A.entries)
    if A.is_exact:
        return fro, fro * Fraction(1, A.dim)
    return fro, fro / A.dim


def factor_sq(A: MatrixAtLevel):
    return norms(A)[1]


def difference(A: MatrixAtLevel, B: MatrixAtLevel) -> MatrixAtLevel:
    """A - B at a common level."""
    if A.level != B.level:
        raise LevelMismatchError(f"cannot subtract level {B.level} from level {A.level}")
    return MatrixAtLevel(level=A.level, entries=A.entries - B.entries)


def hermitian_part(A: MatrixAtLevel) -> MatrixAtLevel:
    return MatrixAtLevel(level=A.level, entries=(A.entries + A.entries.conj().T) / 2)


def to_numeric(A: MatrixAtLevel) -> MatrixAtLevel:
    """Float realization of a (possibly exact) matrix."""
    if not A.is_exact:
        return A
    numeric = np.array([[complex(z) for z in row] for row in A.entries], dtype=np.complex128)
    return MatrixAtLevel(level=A.level, entries=numeric)


def classify(A: MatrixAtLevel, cfg: Optional[ToleranceConfig] = None) -> ClassifyFlags:
    """
    Selfadjoint / positive / projection flags within cfg.proj_tol.

    Positivity is decided on selfadjoint inputs only, from the smallest
    eigenvalue of the Hermitian part.
    """
    cfg = cfg or ToleranceConfig()
    numeric = to_numeric(A)
    X = numeric.entries
    selfadjoint = np.sqrt(fro_sq(X - X.conj().T)) <= cfg.proj_tol
    if not selfadjoint:
        return ClassifyFlags(selfadjoint=False, positive=False, projection=False)
    projection = np.sqrt(fro_sq(X @ X - X)) <= cfg.proj_tol
    min_eig = float(np.linalg.eigvalsh(hermitian_part(numeric).entries)[0])
    positive = min_eig >= -cfg.proj_tol
    return ClassifyFlags(selfadjoint=True, positive=bool(positive), projection=bool(projection))


def x_discrete(k: int) -> DiagonalVector:
    """x_k = sum_i (i/2^k) p_i^k as a diagonal vector."""
    n = 2 ** check_level(k)
    return DiagonalVector(level=k, values=np.arange(1, n + 1) / n)


def coherence_check(k: int) -> bool:
    """e^{k+1}_{2i-1,2j-1} + e^{k+1}_{2i,2j} == embed(e^k_{ij}) for all i, j."""
    n = 2 ** check_level(k + 1) // 2
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            split = matrix_unit(k + 1, 2 * i - 1, 2 * j - 1).entries + matrix_unit(k + 1, 2 * i, 2 * j).entries
            if not np.array_equal(split, embed(matrix_unit(k, i, j)).entries):
                logger.debug("coherence fails at level %d unit (%d,%d)", k, i, j)
                return False
    return True


def x_monotone_check(k: int) -> bool:
    """The discrete operators x_k are non-increasing along the tower."""
    upper = np.diagonal(embed(diag_matrix(x_discrete(k).values)).entries).real
    lower = x_discrete(k + 1).real
    return bool(np.all(upper >= lower))
