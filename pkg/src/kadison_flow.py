"""
The Kadison iteration A(n+1) = W_{k+n-1} embed(A(n)) W_{k+n-1}* and its diagnostics.

A seed A = A(1) at level k produces iterates A(n) at level k+n-1. This module
runs the iteration, records factor-norm deltas and their contraction ratios,
predicts the diagonal of every iterate in closed form, compares it with the
piecewise-linear limit diagonal f, and checks the distance-scaling and
structure-preservation properties of the limit.
"""

import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from src import config, dyadic_core, walsh_rotations
from src.errors import ConfigError, DomainError, IndexOutOfRangeError, LevelMismatchError, LevelOverflowError
from src.schemas import (
    LAMBDA,
    ClassifyFlags,
    DiagDeviation,
    DiagonalVector,
    DistanceSeries,
    IterationTrace,
    MatrixAtLevel,
    SeedSpec,
    StepRecord,
    StructureReport,
    ToleranceConfig,
)

logger = logging.getLogger(__name__)

SeedKind = Literal["general", "selfadjoint", "projection", "diagonal"]

# entrywise tolerance of the even/odd structure of the iterate diagonals
STRUCTURE_TOL = 1e-12


def make_seed(A: MatrixAtLevel) -> SeedSpec:
    """Wrap a matrix as a seed, caching its diagonal when it is real."""
    d = dyadic_core.diag_compress(A).values
    real_diag = None
    if not A.is_exact and np.all(np.abs(np.imag(d)) <= STRUCTURE_TOL):
        real_diag = [float(x) for x in np.real(d)]
    return SeedSpec(k=A.level, A=A, d=real_diag)


def _embedded_step(A_n: MatrixAtLevel, max_level: Optional[int]) -> Tuple[MatrixAtLevel, MatrixAtLevel]:
    """(embed(A_n), next iterate), embedding A_n once."""
    if A_n.level < 1:
        raise DomainError("the iteration needs seeds of level >= 1")
    E = dyadic_core.embed(A_n, max_level)
    return E, walsh_rotations.conjugate_by_w(E, A_n.level)


def step(A_n: MatrixAtLevel, max_level: Optional[int] = None) -> MatrixAtLevel:
    """One iteration step: conjugate_by_w(embed(A_n)) with Walsh index = level of A_n."""
    return _embedded_step(A_n, max_level)[1]


def iterates(A: MatrixAtLevel, max_level: int):
    """Yield A(1), A(2), ... up to level `max_level`."""
    cur = A
    yield cur
    while cur.level < max_level:
        cur = step(cur, max_level)
        yield cur


def run(
    seed: SeedSpec,
    max_level: Optional[int] = None,
    stop_tol: float = 1e-12,
) -> Tuple[IterationTrace, MatrixAtLevel]:
    """
    Iterate from the seed, recording deltas, ratios and diagonal deviations.

    Stops once delta < stop_tol or the level cap is reached; reaching the cap
    first flags the trace as truncated. Returns the trace and the last iterate.
    """
    cap = config.get_max_level() if max_level is None else max_level
    if seed.k >= cap:
        raise LevelOverflowError(f"seed level {seed.k} leaves no room below max level {cap}")

    deltas: List[float] = []
    sup_errs: List[Optional[float]] = []
    levels: List[int] = []
    prev = seed.A
    n = 1
    stopped = False
    while prev.level < cap:
        embedded, cur = _embedded_step(prev, cap)
        n += 1
        delta = dyadic_core.fro_sq(cur.entries - embedded.entries) / cur.dim
        deltas.append(delta)
        levels.append(cur.level)
        if seed.d is not None:
            sup_errs.append(diag_deviation(cur, seed.d, seed.k, n).sup_err)
        else:
            sup_errs.append(None)
        logger.debug("n=%d level=%d delta=%.17g", n, cur.level, delta)
        prev = cur
        if delta < stop_tol:
            stopped = True
            break

    steps = []
    for index, delta in enumerate(deltas):
        ratio = None
        if index + 1 < len(deltas) and delta > 0:
            ratio = deltas[index + 1] / delta
        steps.append(StepRecord(n=index + 2, level=levels[index], delta=delta, ratio=ratio, diag_sup_err=sup_errs[index]))

    trace = IterationTrace(k=seed.k, steps=steps, truncated=not stopped)
    if trace.truncated:
        logger.info("iteration from level %d truncated at level %d", seed.k, prev.level)
    return trace, prev


def contraction_holds(trace: IterationTrace, slack: float = 1e-9) -> bool:
    """delta_{n+1} <= lambda * delta_n + slack for every recorded n."""
    deltas = trace.deltas
    return all(b <= LAMBDA * a + slack for a, b in zip(deltas, deltas[1:]))


def max_ratio(trace: IterationTrace) -> Optional[float]:
    defined = [r for r in trace.ratios if r is not None]
    return max(defined) if defined else None


def cauchy_tail_check(trace: IterationTrace, slack: float = 1e-9) -> bool:
    """
    Geometric summability of sqrt(delta_n).

    The observed tail sum after n never exceeds sqrt(delta_n) sqrt(lam)/(1 - sqrt(lam)).
    """
    roots = [math.sqrt(d) for d in trace.deltas]
    q = math.sqrt(LAMBDA)
    for index, root in enumerate(roots):
        tail = math.fsum(roots[index + 1:])
        if tail > root * q / (1.0 - q) + slack:
            return False
    return True


def _check_pairs(d: Sequence[float], k: int) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if k < 1 or d.shape != (2 ** k,):
        raise LevelMismatchError(f"expected {2 ** k} diagonal values for level {k}, got {d.shape}")
    return d


def gamma(d: Sequence[float], l: int, h: int, n: int) -> float:
    """gamma^n_{l,h} = d_{2l-1} + (h / 2^(n-1)) (d_{2l} - d_{2l-1})."""
    half = len(d) // 2
    if n < 1 or not 1 <= l <= half or not 0 <= h <= 2 ** (n - 1):
        raise IndexOutOfRangeError(f"gamma index (l={l}, h={h}, n={n}) out of range")
    lo, hi = d[2 * l - 2], d[2 * l - 1]
    if h == 0:
        return float(lo)
    if h == 2 ** (n - 1):
        return float(hi)
    return float(lo + (h / 2 ** (n - 1)) * (hi - lo))


def predicted_diagonal(d: Sequence[float], k: int, n: int, max_level: Optional[int] = None) -> DiagonalVector:
    """
    Closed-form diagonal of A(n) for a seed with real diagonal d.

    Position 2^n(l-1)+2h-1 carries gamma^n_{l,h-1} and position 2^n(l-1)+2h
    carries gamma^n_{l,h}, for l = 1..2^(k-1) and h = 1..2^(n-1).
    """
    d = _check_pairs(d, k)
    if n < 1:
        raise IndexOutOfRangeError(f"iterate index must be >= 1, got {n}")
    level = dyadic_core.check_level(k + n - 1, max_level)
    lo, hi = d[0::2], d[1::2]
    h = np.arange(2 ** (n - 1) + 1)
    weights = h / 2 ** (n - 1)
    g = lo[:, None] + weights[None, :] * (hi - lo)[:, None]
    # endpoints exactly equal to the seed values
    g[:, 0] = lo
    g[:, -1] = hi
    out = np.stack([g[:, :-1], g[:, 1:]], axis=2)
    return DiagonalVector(level=level, values=out.reshape(-1))


def f_eval(t: float, d: Sequence[float], k: int, side: Literal["right", "left"] = "right") -> float:
    """
    Piecewise-linear limit diagonal f(t).

    On interval j, f(t) = d_{2j-1} + 2^(k-1) (t - (j-1)/2^(k-1)) (d_{2j} - d_{2j-1}).
    With side="right" intervals are [(j-1)/2^(k-1), j/2^(k-1)) and f(1) = d_{2^k};
    with side="left" they are closed on the right, so f(j/2^(k-1)) = d_{2j}.
    """
    d = _check_pairs(d, k)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"f is defined on [0, 1], got t={t}")
    cells = 2 ** (k - 1)
    if side == "right":
        j = cells if t == 1.0 else math.floor(t * cells) + 1
    else:
        j = max(1, math.ceil(t * cells))
    lo, hi = d[2 * j - 2], d[2 * j - 1]
    return float(lo + cells * (t - (j - 1) / cells) * (hi - lo))


def limit_samples(d: Sequence[float], k: int, level: int) -> np.ndarray:
    """f sampled at i/2^level, i = 1..2^level, each point taken in its closed interval."""
    d = _check_pairs(d, k)
    size = 2 ** level
    cells = 2 ** (k - 1)
    t = np.arange(1, size + 1) / size
    j = np.maximum(1, np.ceil(t * cells).astype(int))
    lo, hi = d[2 * j - 2], d[2 * j - 1]
    return lo + cells * (t - (j - 1) / cells) * (hi - lo)


def diag_deviation(A_n: MatrixAtLevel, d: Sequence[float], k: int, n: int) -> DiagDeviation:
    """
    Compare diag(A(n)) with f sampled at i/2^(k+n-1).

    Even positions should match f exactly; odd positions 2^n(l-1)+2h-1 should
    sit exactly (d_{2l} - d_{2l-1})/2^n below it.
    """
    d = _check_pairs(d, k)
    level = k + n - 1
    if A_n.level != level:
        raise LevelMismatchError(f"A({n}) of a level-{k} seed lives at level {level}, got {A_n.level}")
    diag = np.real(np.diagonal(A_n.entries))
    dev = diag - limit_samples(d, k, level)
    even = dev[1::2]
    odd = dev[0::2]
    gaps = (d[1::2] - d[0::2]) / 2 ** n
    expected_odd = -np.repeat(gaps, 2 ** (n - 1))
    return DiagDeviation(
        sup_err=float(np.max(np.abs(dev))),
        even_exact=bool(np.all(np.abs(even) <= STRUCTURE_TOL)),
        odd_structured=bool(np.all(np.abs(odd - expected_odd) <= STRUCTURE_TOL)),
    )


def diag_locality_gap(A: MatrixAtLevel, max_level: Optional[int] = None) -> float:
    """Sup gap between diag(step(A)) and diag(step(diag_part(A)))."""
    full = np.diagonal(step(A, max_level).entries)
    local = np.diagonal(step(dyadic_core.diag_part(A), max_level).entries)
    return float(np.max(np.abs(full - local)))


def verify_distance_scaling(
    A: MatrixAtLevel,
    B: MatrixAtLevel,
    max_level: Optional[int] = None,
    rel_tol: float = 1e-10,
) -> DistanceSeries:
    """
    Iterate two seeds in lockstep and record 2^-level ||B(n) - A(n)||_F^2.

    The series is constant and equal to 2^-k ||B - A||_F^2.
    """
    if A.level != B.level:
        raise LevelMismatchError(f"seeds live at levels {A.level} and {B.level}")
    cap = config.get_max_level() if max_level is None else max_level
    expected = dyadic_core.fro_sq(B.entries - A.entries) / A.dim
    levels: List[int] = []
    values: List[float] = []
    for a_n, b_n in zip(iterates(A, cap), iterates(B, cap)):
        levels.append(a_n.level)
        values.append(dyadic_core.fro_sq(b_n.entries - a_n.entries) / a_n.dim)
    if expected > 0:
        constant = all(abs(v - expected) <= rel_tol * expected for v in values)
    else:
        constant = all(v <= rel_tol for v in values)
    return DistanceSeries(k=A.level, expected=expected, levels=levels, values=values, constant=constant)


def structure_report(
    A: MatrixAtLevel,
    max_level: Optional[int] = None,
    cfg: Optional[ToleranceConfig] = None,
) -> StructureReport:
    """
    Classify every iterate; the tolerance for A(n) is proj_tol * n.

    Preserved means every flag the seed carries is carried by all iterates.
    """
    cfg = cfg or ToleranceConfig()
    cap = config.get_max_level() if max_level is None else max_level
    seed_flags = dyadic_core.classify(A, cfg)
    levels: List[int] = []
    flags: List[ClassifyFlags] = []
    worst = 0.0
    for n, a_n in enumerate(iterates(A, cap), start=1):
        current = dyadic_core.classify(a_n, cfg.relaxed(n))
        levels.append(a_n.level)
        flags.append(current)
        if seed_flags.projection:
            X = a_n.entries
            worst = max(worst, math.sqrt(dyadic_core.fro_sq(X @ X - X)))
    preserved = all(
        (not seed_flags.selfadjoint or f.selfadjoint)
        and (not seed_flags.positive or f.positive)
        and (not seed_flags.projection or f.projection)
        for f in flags
    )
    return StructureReport(
        seed_flags=seed_flags,
        levels=levels,
        flags=flags,
        max_idempotence_err=worst if seed_flags.projection else None,
        preserved=preserved,
    )


def random_seed(kind: SeedKind, k: int, rng: np.random.Generator) -> MatrixAtLevel:
    """
    Random seed at level k.

    Entries have real and imaginary parts uniform in [-1, 1]; `selfadjoint`
    takes (A + A*)/2, `projection` rounds its spectrum at 1/2, `diagonal` draws
    a real diagonal uniform in [0, 1].
    """
    n = 2 ** dyadic_core.check_level(k)
    if kind == "diagonal":
        return dyadic_core.diag_matrix(rng.uniform(0.0, 1.0, size=n))
    X = rng.uniform(-1.0, 1.0, size=(n, n)) + 1j * rng.uniform(-1.0, 1.0, size=(n, n))
    if kind == "general":
        return MatrixAtLevel(level=k, entries=X)
    H = (X + X.conj().T) / 2
    if kind == "selfadjoint":
        return MatrixAtLevel(level=k, entries=H)
    if kind == "projection":
        eigvals, eigvecs = np.linalg.eigh(H)
        V = eigvecs[:, eigvals > 0.5]
        return MatrixAtLevel(level=k, entries=V @ V.conj().T)
    raise DomainError(f"unknown seed kind {kind!r}")


NAMED_SEEDS = ("diag01", "identity", "rand-sa", "rand-proj")


def named_seed(name: str, k: int, rng: np.random.Generator) -> MatrixAtLevel:
    """
    Built-in seeds: `diag01` (diag(0, 1), level 1 only), `identity`,
    `rand-sa` (random selfadjoint) and `rand-proj` (random projection).
    """
    if name == "diag01":
        if k != 1:
            raise ConfigError(f"seed diag01 lives at level 1, got k={k}")
        return dyadic_core.diag_matrix([0.0, 1.0])
    if name == "identity":
        return dyadic_core.identity(k)
    if name == "rand-sa":
        return random_seed("selfadjoint", k, rng)
    if name == "rand-proj":
        return random_seed("projection", k, rng)
    raise ConfigError(f"unknown seed {name!r}; expected one of {', '.join(NAMED_SEEDS)} or a matrix file")
