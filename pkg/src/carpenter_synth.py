"""
Projections with a prescribed diagonal.

Two constructions are provided. `horn_projection` handles any feasible diagonal
with a chain of at most N-1 plane rotations applied to the diagonal projection
diag(1^m, 0^(N-m)). `circulant_projection` uses the circulant algebra, whose
image under the diagonal compression is the scalars, to produce projections
with constant diagonal m/N; `discrete_carpenter` assembles those blocks for
piecewise-constant targets.
"""

import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import DomainError, InfeasibleTargetError, SynthesisError
from src.schemas import BlockSpec, DiagonalTarget, DyadicApproximation, SynthesisResult, ToleranceConfig
from src.validation import require_projection

logger = logging.getLogger(__name__)

# two active values closer than this are treated as equal, so no rotation is spent on them
_TIE_TOL = 1e-13
# slack of the partial-sum comparison when choosing a rotation partner
_MAJOR_TOL = 1e-12


def majorization_feasible(target: DiagonalTarget, cfg: Optional[ToleranceConfig] = None) -> bool:
    """True iff 0 <= d_i <= 1 and sum(d) is an integer within feas_tol."""
    cfg = cfg or ToleranceConfig()
    d = np.asarray(target.d, dtype=float)
    if np.any(d < 0.0) or np.any(d > 1.0):
        return False
    return abs(target.mass - round(target.mass)) <= cfg.feas_tol


def _rotate(M: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    """In-place G M G^T with G = [[c, -s], [s, c]] acting on coordinates (i, j)."""
    row_i, row_j = M[i].copy(), M[j].copy()
    M[i] = c * row_i - s * row_j
    M[j] = s * row_i + c * row_j
    col_i, col_j = M[:, i].copy(), M[:, j].copy()
    M[:, i] = c * col_i - s * col_j
    M[:, j] = s * col_i + c * col_j


def _majorizes(values, targets: np.ndarray) -> bool:
    """Sorted partial sums of `values` dominate those of the descending `targets`."""
    a = np.sort(np.asarray(values, dtype=float))[::-1]
    return bool(np.all(np.cumsum(a) - np.cumsum(targets) >= -_MAJOR_TOL))


def _rotation_pair(values: Dict[int, float], t: float, remaining: np.ndarray) -> Tuple[int, int]:
    """
    Slots (i, j) with a_i > t > a_j for the next rotation.

    i holds the maximal active value and j is the lowest-index partner whose
    new value a_i + a_j - t leaves the remaining targets majorized. When no
    such partner exists the adjacent pair is used: the smallest value above t
    with the largest value below it.
    """
    upper = [s for s in values if values[s] > t]
    lower = [s for s in values if values[s] < t]
    if not upper or not lower:
        raise SynthesisError(f"no rotation pair brackets target {t!r}; active values {sorted(values.values())}")
    i = min(upper, key=lambda s: (-values[s], s))
    for j in sorted(lower):
        after = [values[s] for s in values if s not in (i, j)] + [values[i] + values[j] - t]
        if _majorizes(after, remaining):
            return i, j
    logger.debug("no partner of slot %d keeps the targets feasible; using the adjacent pair", i)
    return min(upper, key=lambda s: (values[s], s)), max(lower, key=lambda s: (values[s], -s))


def horn_projection(target: DiagonalTarget, cfg: Optional[ToleranceConfig] = None) -> SynthesisResult:
    """
    Real symmetric projection with diagonal target.d.

    Targets are taken in stable descending order. For target t, the active
    diagonal value equal to t (within _TIE_TOL) is fixed without rotating;
    otherwise the pair chosen by `_rotation_pair` is rotated so that the i-th
    entry becomes exactly t, and slot i is fixed. The partner keeps
    a_i + a_j - t. Off-diagonal entries created by a rotation are nonnegative.
    """
    cfg = cfg or ToleranceConfig()
    if not majorization_feasible(target, cfg):
        raise InfeasibleTargetError(
            f"target of size {target.n} with mass {target.mass!r} is not the diagonal of a projection "
            "(entries must lie in [0, 1] and sum to an integer)"
        )
    d = np.asarray(target.d, dtype=float)
    n, m = target.n, target.m
    M = np.diag(np.concatenate([np.ones(m), np.zeros(n - m)]))
    active: List[int] = list(range(n))
    slot_of = np.empty(n, dtype=int)
    rotations = 0

    order = np.argsort(-d, kind="stable")
    for index, p in enumerate(order):
        t = d[p]
        if len(active) == 1:
            slot_of[p] = active.pop()
            break
        values = {s: M[s, s] for s in active}
        equal = [s for s in active if abs(values[s] - t) <= _TIE_TOL]
        if equal:
            slot = equal[0]
        else:
            i, j = _rotation_pair(values, t, d[order[index + 1:]])
            c2 = (t - values[j]) / (values[i] - values[j])
            _rotate(M, i, j, math.sqrt(c2), math.sqrt(1.0 - c2))
            rotations += 1
            slot = i
        slot_of[p] = slot
        active.remove(slot)

    P = M[np.ix_(slot_of, slot_of)]
    P = (P + P.T) / 2
    check = require_projection(P, d, m, cfg)
    if rotations > max(n - 1, 0):
        raise SynthesisError(f"used {rotations} rotations for a target of size {n}")
    logger.info("horn projection: n=%d m=%d rotations=%d", n, m, rotations)
    return SynthesisResult(matrix=P, rotations=rotations, check=check)


def circulant_projection(n: int, m: int) -> np.ndarray:
    """P = F* diag(1_S) F for the unitary DFT matrix F and S = {0, ..., m-1}; diag(P) = m/n."""
    if n < 1 or not 0 <= m <= n:
        raise DomainError(f"circulant projection needs 0 <= m <= n and n >= 1, got n={n}, m={m}")
    F = np.fft.fft(np.eye(n), norm="ortho")
    rows = F[:m]
    P = rows.conj().T @ rows
    P = (P + P.conj().T) / 2
    return P


def shift_operator(n: int) -> np.ndarray:
    """Cyclic shift u with u e_i = e_{i+1 mod n}."""
    return np.roll(np.eye(n), 1, axis=0)


def circulant_matrix(first_column) -> np.ndarray:
    """sum_j c_j u^j: the circulant whose first column is `first_column`."""
    c = np.asarray(first_column)
    n = c.size
    u = shift_operator(n)
    out = np.zeros((n, n), dtype=np.result_type(c, float))
    power = np.eye(n)
    for coeff in c:
        out = out + coeff * power
        power = u @ power
    return out


def orthogonality_check(n: int) -> bool:
    """
    Diagonal compression of the circulant algebra is the scalar trace.

    diag(u^0) is the all-ones vector and diag(u^j) vanishes for j = 1..n-1.
    """
    if n < 2:
        raise DomainError(f"orthogonality check needs n >= 2, got {n}")
    u = shift_operator(n)
    power = np.eye(n)
    for j in range(n):
        expected = np.ones(n) if j == 0 else np.zeros(n)
        if not np.array_equal(np.diagonal(power), expected):
            logger.debug("diag(u^%d) is not constant for n=%d", j, n)
            return False
        power = u @ power
    return True


def discrete_carpenter(blocks: BlockSpec, cfg: Optional[ToleranceConfig] = None) -> SynthesisResult:
    """
    Block-diagonal projection with a piecewise-constant diagonal.

    Each block of size b with value alpha receives circulant_projection(b, alpha*b);
    indices outside every block get 0.
    """
    cfg = cfg or ToleranceConfig()
    out = np.zeros((blocks.n, blocks.n), dtype=np.complex128)
    for block in blocks.blocks:
        size = len(block.indices)
        mass = block.alpha * size
        if abs(mass - round(mass)) > cfg.feas_tol:
            raise InfeasibleTargetError(
                f"block {block.indices} with value {block.alpha!r} has non-integral mass {mass!r}; "
                "use horn_projection on the flattened target instead"
            )
        idx = np.asarray(block.indices) - 1
        out[np.ix_(idx, idx)] = circulant_projection(size, int(round(mass)))
    check = require_projection(out, blocks.flattened(), cfg=cfg)
    logger.info("discrete carpenter: n=%d blocks=%d", blocks.n, len(blocks.blocks))
    return SynthesisResult(matrix=out, rotations=0, check=check)


def dyadic_constant_target(alpha: float, k: int) -> DyadicApproximation:
    """Best approximation m/2^k of a constant diagonal value alpha in [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"constant diagonal must lie in [0, 1], got {alpha!r}")
    if k < 0:
        raise DomainError(f"level must be nonnegative, got {k}")
    size = 2 ** k
    m = min(max(int(round(alpha * size)), 0), size)
    value = m / size
    return DyadicApproximation(k=k, m=m, value=value, alpha=alpha, gap=abs(alpha - value))


def random_feasible_target(n: int, rng: np.random.Generator) -> DiagonalTarget:
    """Diagonal of a random rank-m projection, m uniform in 1..n-1 (0..n for n = 1)."""
    if n < 1:
        raise DomainError(f"target size must be positive, got {n}")
    m = int(rng.integers(1, n)) if n > 1 else int(rng.integers(0, 2))
    X = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    Q, _ = np.linalg.qr(X)
    d = np.clip(np.sum(np.abs(Q) ** 2, axis=1), 0.0, 1.0)
    # renormalize the rounding residue so the mass is exactly m
    d = np.clip(d + (m - math.fsum(d)) / n, 0.0, 1.0)
    return DiagonalTarget(d=[float(x) for x in d])


def circulant_synthesis(n: int, m: int, cfg: Optional[ToleranceConfig] = None) -> SynthesisResult:
    """circulant_projection(n, m) with its post-checks."""
    P = circulant_projection(n, m)
    return SynthesisResult(matrix=P, rotations=0, check=require_projection(P, [m / n] * n, m, cfg))
