"""
Chains of projections with prescribed dyadic diagonals, and their coherence ratios.

A target function g: [0, 1] -> [0, 1] is discretized on every level k into a
step function with integral mass; each step is realized as a projection A_k,
and the chain is scored by r_k = 1/2 fro^2(A_{k+1} - embed(A_k)) / fro^2(A_k - embed(A_{k-1})).
A chain whose ratios stay below 1 is Cauchy in the factor 2-norm.
"""

import logging
import math
from typing import Callable, Iterable, List, Literal, Optional, Sequence

import numpy as np
from tqdm import tqdm

from src import dyadic_core, kadison_flow
from src.carpenter_synth import horn_projection
from src.errors import ChainTooShortError, DomainError
from src.schemas import (
    ChainLink,
    DiagonalTarget,
    DyadicStep,
    MatrixAtLevel,
    ProjectionChain,
    RatioReport,
    RatioRow,
    ToleranceConfig,
)

logger = logging.getLogger(__name__)

Heuristic = Literal["fresh", "phase_align"]
TargetFunction = Callable[[float], float]

QUADRATURE_POINTS = 16
MAX_SWEEPS = 50
SWEEP_TOL = 1e-10
# admissible overshoot of g outside [0, 1] before it is rejected
RANGE_TOL = 1e-12


def builtin_function(spec: str) -> TargetFunction:
    """`linear`, `square`, `const:<v>` or `step:<t0>` (0 before t0, 1 from t0 on)."""
    if spec == "linear":
        return lambda t: t
    if spec == "square":
        return lambda t: t * t
    name, _, arg = spec.partition(":")
    if name in ("const", "step") and arg:
        try:
            value = float(arg)
        except ValueError:
            raise DomainError(f"bad parameter in function spec {spec!r}") from None
        if name == "const":
            return lambda t: value
        return lambda t: 1.0 if t >= value else 0.0
    raise DomainError(f"unknown target function {spec!r}; expected linear, square, const:<v> or step:<t0>")


def sampled_function(samples: Sequence[float]) -> TargetFunction:
    """Piecewise-constant g taking samples[i] on the i-th of len(samples) equal cells."""
    values = np.asarray(samples, dtype=float)
    dyadic_core.level_of(values.size)
    size = values.size

    def g(t: float) -> float:
        return float(values[min(int(math.floor(t * size)), size - 1)])

    return g


def _cell_samples(g: TargetFunction, k: int) -> np.ndarray:
    """g at QUADRATURE_POINTS midpoints of every cell of level k, shape (2^k, points)."""
    cells = 2 ** k
    offsets = (np.arange(QUADRATURE_POINTS) + 0.5) / QUADRATURE_POINTS
    t = (np.arange(cells)[:, None] + offsets[None, :]) / cells
    values = np.array([g(float(x)) for x in t.flat], dtype=float).reshape(t.shape)
    if np.any(values < -RANGE_TOL) or np.any(values > 1.0 + RANGE_TOL):
        raise DomainError("target function leaves [0, 1]")
    return np.clip(values, 0.0, 1.0)


def discretize(g: TargetFunction, k: int, max_level: Optional[int] = None) -> DyadicStep:
    """
    Dyadic step approximation of g on level k with integral mass.

    Cell averages come from the midpoint rule; the mass is rounded by adding
    (round(sum) - sum)/2^k to every cell, clamping to [0, 1], and spreading the
    clamped excess over the cells in proportion to their remaining headroom.
    """
    dyadic_core.check_level(k, max_level)
    raw = _cell_samples(g, k).mean(axis=1)
    mass = int(round(math.fsum(raw)))
    values = np.clip(raw + (mass - math.fsum(raw)) / raw.size, 0.0, 1.0)

    excess = mass - math.fsum(values)
    if excess > 0:
        room = 1.0 - values
    else:
        room = values.copy()
    total_room = math.fsum(room)
    if abs(excess) > 0:
        if total_room < abs(excess) - RANGE_TOL:
            raise DomainError(f"cannot reach mass {mass} on level {k} after clamping")
        values = np.clip(values + excess * room / total_room, 0.0, 1.0)
    return DyadicStep(k=k, values=[float(v) for v in values], mass=mass)


def l2_gap(g: TargetFunction, step: DyadicStep) -> float:
    """L2([0, 1]) distance between g and the step function, by the same quadrature."""
    samples = _cell_samples(g, step.k)
    diff = samples - np.asarray(step.values)[:, None]
    return math.sqrt(float(np.mean(diff ** 2)))


def _objective(X: np.ndarray, T: np.ndarray) -> float:
    return dyadic_core.fro_sq(X - T)


def phase_align(A: MatrixAtLevel, T: MatrixAtLevel) -> MatrixAtLevel:
    """
    Conjugate A by a diagonal unitary D to bring it closer to T.

    Coordinate descent on the phases: each phi_p is set to maximize
    Re(phi_p sum_q C_pq conj(phi_q)) with C_pq = A_pq conj(T_pq) + conj(A_qp) T_qp.
    The objective fro^2(D A D* - T) never increases and diag(A) is kept as is.
    """
    if A.level != T.level:
        raise DomainError(f"cannot align a level-{A.level} matrix to a level-{T.level} target")
    X = np.asarray(A.entries, dtype=np.complex128)
    target = np.asarray(T.entries, dtype=np.complex128)
    C = X * target.conj() + X.conj().T * target.T
    np.fill_diagonal(C, 0.0)
    phi = np.ones(A.dim, dtype=np.complex128)
    best = _objective(X, target)

    for sweep in range(MAX_SWEEPS):
        trial = phi.copy()
        for p in range(A.dim):
            z = C[p] @ trial.conj()
            if abs(z) > 0:
                trial[p] = z.conjugate() / abs(z)
        aligned = trial[:, None] * X * trial.conj()[None, :]
        value = _objective(aligned, target)
        if value > best:
            break
        improvement = best - value
        phi, best = trial, value
        if improvement < SWEEP_TOL:
            break
    logger.debug("phase alignment at level %d: objective %.17g after %d sweeps", A.level, best, sweep + 1)

    out = phi[:, None] * X * phi.conj()[None, :]
    np.fill_diagonal(out, np.diagonal(X))
    return MatrixAtLevel(level=A.level, entries=out)


def synthesize_chain(
    g: TargetFunction,
    k_min: int,
    k_max: int,
    heuristic: Heuristic = "fresh",
    cfg: Optional[ToleranceConfig] = None,
    function_name: Optional[str] = None,
    max_level: Optional[int] = None,
) -> ProjectionChain:
    """Horn projections A_k with diag(A_k) = discretize(g, k), k = k_min..k_max."""
    if k_min < 1 or k_max < k_min:
        raise DomainError(f"chain needs 1 <= k_min <= k_max, got {k_min}..{k_max}")
    if heuristic not in ("fresh", "phase_align"):
        raise DomainError(f"unknown heuristic {heuristic!r}")
    dyadic_core.check_level(k_max, max_level)
    links: List[ChainLink] = []
    for k in tqdm(range(k_min, k_max + 1), desc=f"chain {heuristic}", leave=False):
        step = discretize(g, k, max_level)
        result = horn_projection(DiagonalTarget(d=step.values), cfg)
        A_k = MatrixAtLevel(level=k, entries=result.matrix)
        if heuristic == "phase_align" and links:
            A_k = phase_align(A_k, dyadic_core.embed(links[-1].matrix, max_level))
        links.append(ChainLink(k=k, matrix=A_k, target=step.values))
    logger.info("built %s chain for levels %d..%d", heuristic, k_min, k_max)
    return ProjectionChain(links=links, heuristic=heuristic, function=function_name)


def extend_by_embedding(chain: ProjectionChain, k_max: int, max_level: Optional[int] = None) -> ProjectionChain:
    """Append A_{k+1} = embed(A_k) until level k_max."""
    links = list(chain.links)
    while links[-1].k < k_max:
        last = links[-1]
        target = None if last.target is None else [v for v in last.target for _ in range(2)]
        links.append(ChainLink(k=last.k + 1, matrix=dyadic_core.embed(last.matrix, max_level), target=target))
    return ProjectionChain(links=links, heuristic=f"{chain.heuristic}+embed", function=chain.function)


def iteration_chain(seed: MatrixAtLevel, k_max: int, max_level: Optional[int] = None) -> ProjectionChain:
    """The Kadison iterates of `seed` read as a chain, one link per level."""
    dyadic_core.check_level(k_max, max_level)
    links = [ChainLink(k=A_n.level, matrix=A_n) for A_n in kadison_flow.iterates(seed, k_max)]
    return ProjectionChain(links=links, heuristic="kadison")


def _limsup_estimate(ratios: Iterable[Optional[float]]) -> Optional[float]:
    defined = [r for r in ratios if r is not None]
    if not defined:
        return None
    window = math.ceil(len(defined) / 2)
    return max(defined[-window:])


def ratio_report(
    chain: ProjectionChain,
    g: Optional[TargetFunction] = None,
    max_level: Optional[int] = None,
) -> RatioReport:
    """
    Per-level distances to the embedded predecessor and the coherence ratios r_k.

    r_k is left undefined where fro^2(A_k - embed(A_{k-1})) vanishes. The
    limsup estimate is the max over the last half of the defined ratios; it is
    an estimate only.
    """
    links = chain.links
    if len(links) < 3:
        raise ChainTooShortError(f"ratio report needs at least 3 levels, got {len(links)}")
    dists: List[Optional[float]] = [None]
    for prev, cur in zip(links, links[1:]):
        dists.append(dyadic_core.fro_sq(cur.matrix.entries - dyadic_core.embed(prev.matrix, max_level).entries))

    rows: List[RatioRow] = []
    for index, link in enumerate(links):
        r_k = None
        if 0 < index < len(links) - 1 and dists[index] > 0:
            r_k = 0.5 * dists[index + 1] / dists[index]
        mass = None
        gap = None
        if link.target is not None:
            mass = int(round(math.fsum(link.target)))
            if g is not None:
                gap = l2_gap(g, DyadicStep(k=link.k, values=link.target, mass=mass))
        rows.append(RatioRow(k=link.k, mass=mass, fro_dist_to_embed_prev=dists[index], r_k=r_k, l2_gap=gap))

    return RatioReport(
        function=chain.function,
        heuristic=chain.heuristic,
        rows=rows,
        limsup_estimate=_limsup_estimate(row.r_k for row in rows),
    )
