"""
Exact arithmetic in Q(sqrt2) and its complexification.

QuadExt is a + b*sqrt2 with rational a, b; QuadExtComplex is re + i*im with
QuadExt parts. Both mix freely with int and Fraction operands, so numpy object
arrays of them support `@`, `.conj()`, `.T` and the dyadic_core operations.
The one- and two-step distance identities of the 2x2 iteration and the
contraction constant are checked here with zero rounding.
"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import List, Tuple

import numpy as np
from tqdm import tqdm

from src import dyadic_core, walsh_rotations
from src.errors import LevelMismatchError
from src.schemas import LAMBDA, ExactCheckReport, ExactSide, MatrixAtLevel

logger = logging.getLogger(__name__)

def _rational(x) -> Fraction:
    if isinstance(x, bool) or isinstance(x, float):
        raise TypeError(f"exact arithmetic needs int or Fraction, got {type(x).__name__}")
    return Fraction(x)


@total_ordering
@dataclass(frozen=True, eq=False, slots=True)
class QuadExt:
    """a + b*sqrt2 with rational a, b (reduced Fractions)."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _rational(self.a))
        object.__setattr__(self, "b", _rational(self.b))

    @classmethod
    def coerce(cls, x) -> "QuadExt":
        if isinstance(x, QuadExt):
            return x
        return cls(_rational(x), Fraction(0))

    # ordered-field comparison, decided by sign analysis of a, b and a^2 vs 2b^2
    def is_positive(self) -> bool:
        a, b = self.a, self.b
        return (
            (a >= 0 and b >= 0 and (a > 0 or b > 0))
            or (a >= 0 and b < 0 and a * a > 2 * b * b)
            or (a < 0 and b > 0 and 2 * b * b > a * a)
        )

    def sign(self) -> int:
        if self.a == 0 and self.b == 0:
            return 0
        return 1 if self.is_positive() else -1

    def __eq__(self, other) -> bool:
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __lt__(self, other) -> bool:
        return (self - QuadExt.coerce(other)).sign() < 0

    def __add__(self, other):
        if isinstance(other, QuadExtComplex):
            return NotImplemented
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExt(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self) -> "QuadExt":
        return QuadExt(-self.a, -self.b)

    def __sub__(self, other):
        if isinstance(other, QuadExtComplex):
            return NotImplemented
        try:
            return self + (-QuadExt.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QuadExtComplex):
            return NotImplemented
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExt(self.a * other.a + 2 * self.b * other.b, self.a * other.b + self.b * other.a)

    __rmul__ = __mul__

    def algebraic_conjugate(self) -> "QuadExt":
        """a - b*sqrt2."""
        return QuadExt(self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> "QuadExt":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("QuadExt division by zero")
        c = self.algebraic_conjugate()
        return QuadExt(c.a / n, c.b / n)

    def __truediv__(self, other):
        if isinstance(other, QuadExtComplex):
            return NotImplemented
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return QuadExt.coerce(other) * self.inverse()

    def conjugate(self) -> "QuadExt":
        # complex conjugation; QuadExt is real
        return self

    def abs_sq(self) -> "QuadExt":
        return self * self

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * 2.0 ** 0.5

    def __complex__(self) -> complex:
        return complex(float(self))

    def __repr__(self) -> str:
        return f"QuadExt({self.a!r}, {self.b!r})"

    def __str__(self) -> str:
        if self.b < 0:
            return f"{self.a} - {-self.b}*sqrt2"
        return f"{self.a} + {self.b}*sqrt2"


@dataclass(frozen=True, eq=False, slots=True)
class QuadExtComplex:
    """re + i*im with QuadExt parts."""

    re: QuadExt = QuadExt()
    im: QuadExt = QuadExt()

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", QuadExt.coerce(self.re))
        object.__setattr__(self, "im", QuadExt.coerce(self.im))

    @classmethod
    def coerce(cls, x) -> "QuadExtComplex":
        if isinstance(x, QuadExtComplex):
            return x
        return cls(QuadExt.coerce(x), QuadExt())

    def __eq__(self, other) -> bool:
        try:
            other = QuadExtComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __add__(self, other):
        try:
            other = QuadExtComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExtComplex(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> "QuadExtComplex":
        return QuadExtComplex(-self.re, -self.im)

    def __sub__(self, other):
        try:
            return self + (-QuadExtComplex.coerce(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = QuadExtComplex.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExtComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, QuadExtComplex):
            den = other.abs_sq()
            num = self * other.conjugate()
            return QuadExtComplex(num.re / den, num.im / den)
        try:
            other = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExtComplex(self.re / other, self.im / other)

    def conjugate(self) -> "QuadExtComplex":
        return QuadExtComplex(self.re, -self.im)

    def abs_sq(self) -> QuadExt:
        """|z|^2 = re^2 + im^2 as a QuadExt."""
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"QuadExtComplex({self.re!r}, {self.im!r})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        return f"({self.re}) + i*({self.im})"


SQRT2 = QuadExt(0, 1)
# 1/sqrt2 kept inside Q(sqrt2) as (1/2)*sqrt2
INV_SQRT2 = QuadExt(0, Fraction(1, 2))
EQ5_OFFDIAG = QuadExt(4, -2)  # 4 - 2*sqrt2
EQ6_DIAG = QuadExt(Fraction(5, 2), -1)  # 5/2 - sqrt2


def lambda_exact() -> QuadExt:
    """lambda = (1/2)(1 + 3/2 - sqrt2) = 5/4 - (1/2)sqrt2."""
    return QuadExt(Fraction(5, 4), Fraction(-1, 2))


def exact_array(rows) -> np.ndarray:
    """Build an object array of QuadExtComplex from nested rows of scalars."""
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            if isinstance(value, tuple):
                arr[i, j] = QuadExtComplex(*value)
            else:
                arr[i, j] = QuadExtComplex.coerce(value)
    return arr


def exact_matrix(rows) -> MatrixAtLevel:
    arr = exact_array(rows)
    return MatrixAtLevel(level=dyadic_core.level_of(arr.shape[0]), entries=arr)


def exact_w1() -> np.ndarray:
    """The 4x4 rotation W1 with entries in Q(sqrt2)."""
    c = INV_SQRT2
    return exact_array([
        [1, 0, 0, 0],
        [0, c, -c, 0],
        [0, c, c, 0],
        [0, 0, 0, 1],
    ])


def _exact_step(A: MatrixAtLevel) -> MatrixAtLevel:
    return walsh_rotations.conjugate_by_w(dyadic_core.embed(A), A.level, w1_block=exact_w1())


def _entry(B: MatrixAtLevel, i: int, j: int) -> QuadExtComplex:
    return B.entries[i - 1, j - 1]


def eq5_sides(B: MatrixAtLevel) -> Tuple[QuadExt, QuadExt]:
    """
    Both sides of the one-step distance identity for a 2x2 exact matrix B.

    lhs = ||B(2) - embed(B)||_F^2 with B(2) = W1 embed(B) W1*,
    rhs = (4 - 2sqrt2)(|b12|^2 + |b21|^2) + |b11 - b22|^2.
    """
    _require_2x2(B)
    B2 = _exact_step(B)
    lhs = dyadic_core.fro_sq(B2.entries - dyadic_core.embed(B).entries)
    b11, b12, b21, b22 = _entry(B, 1, 1), _entry(B, 1, 2), _entry(B, 2, 1), _entry(B, 2, 2)
    rhs = EQ5_OFFDIAG * (b12.abs_sq() + b21.abs_sq()) + (b11 - b22).abs_sq()
    return lhs, rhs


def eq6_sides(B: MatrixAtLevel) -> Tuple[QuadExt, QuadExt]:
    """
    Both sides of the two-step distance identity for a 2x2 exact matrix B.

    lhs = (1/2)||B(3) - embed(B(2))||_F^2,
    rhs = (1/2)[(4 - 2sqrt2)(|b12|^2 + |b21|^2) + (5/2 - sqrt2)|b11 - b22|^2].
    """
    _require_2x2(B)
    B2 = _exact_step(B)
    B3 = _exact_step(B2)
    half = Fraction(1, 2)
    lhs = half * dyadic_core.fro_sq(B3.entries - dyadic_core.embed(B2).entries)
    b11, b12, b21, b22 = _entry(B, 1, 1), _entry(B, 1, 2), _entry(B, 2, 1), _entry(B, 2, 2)
    rhs = half * (EQ5_OFFDIAG * (b12.abs_sq() + b21.abs_sq()) + EQ6_DIAG * (b11 - b22).abs_sq())
    return lhs, rhs


def eq5_exact_check(B: MatrixAtLevel) -> bool:
    lhs, rhs = eq5_sides(B)
    return lhs == rhs


def eq6_exact_check(B: MatrixAtLevel) -> bool:
    lhs, rhs = eq6_sides(B)
    return lhs == rhs


def contraction_ratio(B: MatrixAtLevel):
    """
    Exact ratio (1/2)||B(3) - embed(B(2))||^2 / ||B(2) - embed(B)||^2.

    Returns None when the denominator vanishes.
    """
    den, _ = eq5_sides(B)
    num, _ = eq6_sides(B)
    if den == 0:
        return None
    return num / den


def exact_iteration(B: MatrixAtLevel, steps: int) -> List[QuadExt]:
    """
    Run the Walsh iteration exactly and return factor-norm deltas.

    Element n-2 of the result is delta_n = 2^-(k+n-1) ||A(n) - embed(A(n-1))||_F^2
    for n = 2, ..., steps+1.
    """
    deltas = []
    prev = B
    for _ in range(steps):
        cur = _exact_step(prev)
        fro = dyadic_core.fro_sq(cur.entries - dyadic_core.embed(prev).entries)
        deltas.append(QuadExt.coerce(fro) * Fraction(1, 2 ** cur.level))
        prev = cur
    return deltas


def random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), rng.randint(1, 9))


def random_exact_matrix(rng: random.Random) -> MatrixAtLevel:
    """2x2 matrix with complex rational entries of small height."""
    rows = [
        [(random_rational(rng), random_rational(rng)) for _ in range(2)]
        for _ in range(2)
    ]
    return exact_matrix(rows)


def run_exact_suite(samples: int = 50, rng_seed: int = 7, progress: bool = False) -> ExactCheckReport:
    """Check both distance identities and the exact ratio bound on seeded random matrices."""
    rng = random.Random(rng_seed)
    lam = lambda_exact()
    failures = 0
    violations = 0
    first: List[ExactSide] = []
    for index in tqdm(range(samples), desc="exact-check", disable=not progress):
        B = random_exact_matrix(rng)
        l5, r5 = eq5_sides(B)
        l6, r6 = eq6_sides(B)
        if l5 != r5:
            failures += 1
            logger.warning("one-step identity mismatch on sample %d: %s vs %s", index, l5, r5)
        if l6 != r6:
            failures += 1
            logger.warning("two-step identity mismatch on sample %d: %s vs %s", index, l6, r6)
        if l5 != 0 and l6 / l5 > lam:
            violations += 1
            logger.warning("ratio bound violated on sample %d", index)
        if index == 0:
            first = [
                ExactSide(identity="eq5", lhs=str(l5), rhs=str(r5), equal=l5 == r5),
                ExactSide(identity="eq6", lhs=str(l6), rhs=str(r6), equal=l6 == r6),
            ]
    logger.info("exact suite: %d samples, %d failures, %d ratio violations", samples, failures, violations)
    return ExactCheckReport(
        samples=samples,
        rng_seed=rng_seed,
        identities_checked=2 * samples,
        failures=failures,
        ratio_bound_violations=violations,
        lambda_exact=str(lam),
        lambda_float=LAMBDA,
        first_sample=first,
        passed=failures == 0 and violations == 0,
    )


def _require_2x2(B: MatrixAtLevel) -> None:
    if B.level != 1:
        raise LevelMismatchError(f"exact identities take a 2x2 matrix, got level {B.level}")
