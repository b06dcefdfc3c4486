"""
Pydantic schemas for structured data validation.

This module defines the data structures used throughout the laboratory: the
matrix and diagonal values living on the dyadic tower, the per-step records of
the Kadison iteration, synthesis and chain reports, and the run configuration
built by the command-line layer. Every JSON document the CLI writes is the
`model_dump` of one of these models.
"""

import math
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 5/4 - sqrt(2)/2, the step-ratio bound of the Walsh iteration
LAMBDA = 0.5428932188134525


def _coerce_array(value) -> np.ndarray:
    arr = np.asarray(value)
    if arr.dtype != object:
        arr = arr.astype(np.complex128, copy=False)
    return arr


class ToleranceConfig(BaseModel):
    """
    Numerical tolerances shared by the verification routines.

    Attributes:
        eq_tol (float): Entrywise equality tolerance for floating comparisons
        proj_tol (float): Tolerance for selfadjointness/idempotence/positivity
        ratio_slack (float): Additive slack on contraction-ratio checks
        feas_tol (float): Tolerance on the integrality of a prescribed trace
    """

    model_config = ConfigDict(frozen=True)

    eq_tol: float = Field(1e-10, gt=0, description="Entrywise equality tolerance")
    proj_tol: float = Field(1e-8, gt=0, description="Projection/selfadjoint/positivity tolerance")
    ratio_slack: float = Field(1e-9, gt=0, description="Slack added to lambda in ratio checks")
    feas_tol: float = Field(1e-9, gt=0, description="Trace integrality tolerance")

    def relaxed(self, factor: float) -> "ToleranceConfig":
        """Return a copy with proj_tol multiplied by `factor`."""
        return self.model_copy(update={"proj_tol": self.proj_tol * factor})


class MatrixAtLevel(BaseModel):
    """
    A 2^k x 2^k matrix attached to dyadic level k.

    Entries are complex128 in the numeric realization, or an object array of
    exact field elements in the exact realization. The entry array is made
    read-only on construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    level: int = Field(..., ge=0, description="Dyadic level k; side is 2^k")
    entries: np.ndarray = Field(..., description="Square entry array of side 2^k")

    @field_validator("entries", mode="before")
    @classmethod
    def _coerce_entries(cls, value):
        return _coerce_array(value)

    @model_validator(mode="after")
    def _check_shape(self):
        side = 2 ** self.level
        if self.entries.shape != (side, side):
            raise ValueError(f"level {self.level} needs a {side}x{side} array, got shape {self.entries.shape}")
        self.entries.flags.writeable = False
        return self

    @property
    def dim(self) -> int:
        return 2 ** self.level

    @property
    def is_exact(self) -> bool:
        return self.entries.dtype == object


class DiagonalVector(BaseModel):
    """The diagonal (masa) part of a level-k matrix: 2^k scalars."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    level: int = Field(..., ge=0, description="Dyadic level k; length is 2^k")
    values: np.ndarray = Field(..., description="Diagonal values, length 2^k")

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, value):
        return _coerce_array(value)

    @model_validator(mode="after")
    def _check_length(self):
        size = 2 ** self.level
        if self.values.shape != (size,):
            raise ValueError(f"level {self.level} needs {size} diagonal values, got shape {self.values.shape}")
        self.values.flags.writeable = False
        return self

    @property
    def real(self) -> np.ndarray:
        return np.real(self.values)


class ClassifyFlags(BaseModel):
    """Structural flags of a matrix: selfadjoint, positive, projection."""

    selfadjoint: bool
    positive: bool
    projection: bool


class SeedSpec(BaseModel):
    """
    Seed of the Kadison iteration.

    Attributes:
        k (int): Seed level (at least 1)
        A (MatrixAtLevel): The seed matrix A = A(1)
        d (Optional[List[float]]): Real diagonal of A, cached when it is real
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    k: int = Field(..., ge=1, description="Seed level")
    A: MatrixAtLevel
    d: Optional[List[float]] = Field(None, description="Real diagonal of A when it has one")

    @model_validator(mode="after")
    def _check_level(self):
        if self.A.level != self.k:
            raise ValueError(f"seed matrix lives at level {self.A.level}, expected {self.k}")
        if self.d is not None and len(self.d) != 2 ** self.k:
            raise ValueError("cached diagonal has the wrong length")
        return self


class StepRecord(BaseModel):
    """One row of an iteration trace."""

    n: int = Field(..., ge=2, description="Iterate index; A(n) lives at level k+n-1")
    level: int = Field(..., ge=1)
    delta: float = Field(..., ge=0, description="Factor-norm squared distance A(n) - embed(A(n-1))")
    ratio: Optional[float] = Field(None, description="delta_{n+1}/delta_n, null when undefined")
    diag_sup_err: Optional[float] = Field(None, description="Sup deviation of diag(A(n)) from the limit diagonal")


class IterationTrace(BaseModel):
    """Per-step record of the Kadison iteration from a seed at level k."""

    model_config = ConfigDict(populate_by_name=True)

    k: int = Field(..., ge=1)
    lambda_: float = Field(LAMBDA, alias="lambda")
    steps: List[StepRecord] = Field(default_factory=list)
    truncated: bool = Field(False, description="Stopped by the level cap rather than the tolerance")

    @property
    def deltas(self) -> List[float]:
        return [s.delta for s in self.steps]

    @property
    def ratios(self) -> List[Optional[float]]:
        return [s.ratio for s in self.steps]


class DiagDeviation(BaseModel):
    """Comparison of diag(A(n)) with samples of the piecewise-linear limit."""

    sup_err: float
    even_exact: bool
    odd_structured: bool


class DistanceSeries(BaseModel):
    """Lockstep factor-norm distances between two iterations."""

    k: int
    expected: float = Field(..., description="2^-k ||B - A||_F^2")
    levels: List[int]
    values: List[float]
    constant: bool


class StructureReport(BaseModel):
    """Structure flags of the seed and of every iterate."""

    seed_flags: ClassifyFlags
    levels: List[int]
    flags: List[ClassifyFlags]
    max_idempotence_err: Optional[float] = None
    preserved: bool


class DiagonalTarget(BaseModel):
    """
    A prescribed diagonal for projection synthesis.

    Feasibility (entries in [0,1], integral sum) is checked by
    `carpenter_synth.majorization_feasible`, not here.
    """

    d: List[float] = Field(..., min_length=1)

    @field_validator("d")
    @classmethod
    def _finite(cls, value):
        if not all(math.isfinite(x) for x in value):
            raise ValueError("target entries must be finite")
        return value

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def mass(self) -> float:
        return math.fsum(self.d)

    @property
    def m(self) -> int:
        return int(round(self.mass))


class Block(BaseModel):
    """A block of the discrete target: 1-based indices carrying the value alpha."""

    indices: List[int] = Field(..., min_length=1)
    alpha: float = Field(..., ge=0.0, le=1.0)


class BlockSpec(BaseModel):
    """Disjoint blocks of a discrete target in dimension n."""

    n: int = Field(..., ge=1)
    blocks: List[Block]

    @model_validator(mode="after")
    def _disjoint(self):
        seen = set()
        for block in self.blocks:
            for i in block.indices:
                if not 1 <= i <= self.n:
                    raise ValueError(f"block index {i} outside 1..{self.n}")
                if i in seen:
                    raise ValueError(f"index {i} appears in two blocks")
                seen.add(i)
        return self

    def flattened(self) -> List[float]:
        d = [0.0] * self.n
        for block in self.blocks:
            for i in block.indices:
                d[i - 1] = block.alpha
        return d


class ProjectionCheck(BaseModel):
    """Post-check measurements of a synthesized projection."""

    n: int
    m: int
    symmetry_err: float
    idempotence_err: float
    diag_err: float
    eig_err: float
    rank: int
    trace_err: float
    passed: bool


class SynthesisResult(BaseModel):
    """A synthesized projection with its rotation count and post-checks."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    rotations: int = Field(0, ge=0)
    check: ProjectionCheck


class DyadicApproximation(BaseModel):
    """Best approximation m/2^k of a constant diagonal value."""

    k: int
    m: int
    value: float
    alpha: float
    gap: float


class DyadicStep(BaseModel):
    """Dyadic step function g_k: the cell values on level k and their mass."""

    k: int = Field(..., ge=0)
    values: List[float]
    mass: int

    @model_validator(mode="after")
    def _check(self):
        if len(self.values) != 2 ** self.k:
            raise ValueError(f"level {self.k} needs {2 ** self.k} values, got {len(self.values)}")
        if any(v < 0.0 or v > 1.0 for v in self.values):
            raise ValueError("step values must lie in [0, 1]")
        if abs(math.fsum(self.values) - self.mass) > 1e-9:
            raise ValueError("step mass is not the integer sum of its values")
        return self


class ChainLink(BaseModel):
    """One level of a projection chain."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    k: int = Field(..., ge=0)
    matrix: MatrixAtLevel
    target: Optional[List[float]] = None


class ProjectionChain(BaseModel):
    """Consecutive-level matrices A_k, optionally with their prescribed diagonals."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    links: List[ChainLink]
    heuristic: str = "fresh"
    function: Optional[str] = None

    @model_validator(mode="after")
    def _consecutive(self):
        for prev, cur in zip(self.links, self.links[1:]):
            if cur.k != prev.k + 1:
                raise ValueError("chain levels must increase by one")
        return self


class ContractionRow(BaseModel):
    """One random seed of the contraction experiment."""

    sample: int
    kind: str
    k: int
    steps: int
    final_level: int
    max_ratio: Optional[float] = None
    bound_ok: bool
    truncated: bool


class PredictionRow(BaseModel):
    """Closed-form against iterated diagonal for one seed and one n."""

    sample: int
    k: int
    n: int
    level: int
    max_pred_err: float
    sup_err: float
    sup_bound: float
    even_exact: bool
    odd_structured: bool


class DistanceRow(BaseModel):
    """Lockstep distance series summary for one seed pair."""

    sample: int
    k: int
    expected: float
    max_rel_err: float
    constant: bool


class RatioRow(BaseModel):
    """One level of a chain coherence report."""

    k: int
    mass: Optional[int] = None
    fro_dist_to_embed_prev: Optional[float] = None
    r_k: Optional[float] = None
    l2_gap: Optional[float] = None


class RatioReport(BaseModel):
    """Coherence ratios of a chain and the tail-window limsup estimate."""

    function: Optional[str] = None
    heuristic: str
    rows: List[RatioRow]
    limsup_estimate: Optional[float] = None


class ExactSide(BaseModel):
    """Both sides of one exact identity, rendered as `a + b*sqrt2` strings."""

    identity: Literal["eq5", "eq6"]
    lhs: str
    rhs: str
    equal: bool


class ExactCheckReport(BaseModel):
    """Summary of the exact identity suite over random rational matrices."""

    samples: int
    rng_seed: int
    identities_checked: int
    failures: int
    ratio_bound_violations: int
    lambda_exact: str
    lambda_float: float
    first_sample: List[ExactSide] = Field(default_factory=list)
    passed: bool


class Verdict(BaseModel):
    """PASS/FAIL outcome of a verification command and the checks behind it."""

    command: str
    passed: bool
    checks: Dict[str, bool] = Field(default_factory=dict)
    constant: str = Field("", description="Constant the command checks against, as printed")


class RunConfig(BaseModel):
    """Validated flags of one CLI invocation."""

    command: str
    samples: int = Field(1, ge=1)
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None
    k: int = Field(1, ge=1)
    max_level: int = Field(11, ge=1)
    tol: float = Field(1e-12, gt=0)
    rng_seed: int = Field(0, ge=0)
    output_format: Literal["json", "csv"] = "json"

    @model_validator(mode="after")
    def _check(self):
        if self.input_path is not None and not self.input_path.exists():
            raise ValueError(f"input file {self.input_path} does not exist")
        if self.k > self.max_level:
            raise ValueError(f"k={self.k} exceeds max level {self.max_level}")
        return self
