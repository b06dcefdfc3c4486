"""
File formats and tabular export.

Matrices use a plain-text format:

    DYADIC-MATRIX v1
    level <k>
    <2^k lines of 2^k whitespace-separated tokens re,im>

or, for sides that are not powers of two, `GENERAL-MATRIX v1` with a second
line `dim <N>`. Writers emit Python float repr, which round-trips doubles.
Targets and sample files hold one real value per line; blank lines and lines
starting with `#` are ignored.

Reports are written as JSON (`model_dump(mode="json")`) or as CSV through
pandas, with null values left as empty cells.
"""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src import dyadic_core
from src.errors import LevelMismatchError, MatrixFormatError
from src.schemas import DiagonalTarget, MatrixAtLevel

logger = logging.getLogger(__name__)

DYADIC_HEADER = "DYADIC-MATRIX v1"
GENERAL_HEADER = "GENERAL-MATRIX v1"

PathLike = Union[str, Path]


def _token(z: complex) -> str:
    return f"{float(z.real)!r},{float(z.imag)!r}"


def format_matrix(entries: Union[MatrixAtLevel, np.ndarray]) -> str:
    """Render a matrix in the dyadic format, or the general one for other sides."""
    if isinstance(entries, MatrixAtLevel):
        entries = dyadic_core.to_numeric(entries).entries
    arr = np.asarray(entries, dtype=np.complex128)
    n = arr.shape[0]
    try:
        header = [DYADIC_HEADER, f"level {dyadic_core.level_of(n)}"]
    except LevelMismatchError:
        header = [GENERAL_HEADER, f"dim {n}"]
    body = [" ".join(_token(z) for z in row) for row in arr]
    return "\n".join(header + body) + "\n"


def write_matrix(path: PathLike, entries: Union[MatrixAtLevel, np.ndarray]) -> None:
    Path(path).write_text(format_matrix(entries))
    logger.info("wrote matrix to %s", path)


def _parse_token(token: str, line_no: int) -> complex:
    re_part, sep, im_part = token.partition(",")
    if not sep:
        raise MatrixFormatError(f"line {line_no}: token {token!r} is not of the form re,im")
    try:
        return complex(float(re_part), float(im_part))
    except ValueError:
        raise MatrixFormatError(f"line {line_no}: token {token!r} is not numeric") from None


def parse_matrix(text: str) -> np.ndarray:
    """Parse either matrix format into a complex array."""
    lines = [line.strip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if len(lines) < 2:
        raise MatrixFormatError("matrix file needs a header and a size line")
    header, size_line = lines[0], lines[1].split()
    if header == DYADIC_HEADER and len(size_line) == 2 and size_line[0] == "level":
        try:
            n = 2 ** int(size_line[1])
        except ValueError:
            raise MatrixFormatError(f"bad level line {lines[1]!r}") from None
    elif header == GENERAL_HEADER and len(size_line) == 2 and size_line[0] == "dim":
        try:
            n = int(size_line[1])
        except ValueError:
            raise MatrixFormatError(f"bad dim line {lines[1]!r}") from None
    else:
        raise MatrixFormatError(f"unrecognized matrix header {lines[0]!r} / {lines[1]!r}")

    rows = lines[2:]
    if len(rows) != n:
        raise MatrixFormatError(f"expected {n} matrix rows, found {len(rows)}")
    out = np.empty((n, n), dtype=np.complex128)
    for i, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != n:
            raise MatrixFormatError(f"line {i + 3}: expected {n} entries, found {len(tokens)}")
        out[i] = [_parse_token(token, i + 3) for token in tokens]
    return out


def read_matrix(path: PathLike) -> MatrixAtLevel:
    """Load a level-k matrix; a general-format file must still have a power-of-two side."""
    text = _read_text(path)
    try:
        return dyadic_core.as_matrix(parse_matrix(text))
    except LevelMismatchError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc.strerror}") from None


def _read_values(path: PathLike) -> List[float]:
    values = []
    for line_no, line in enumerate(_read_text(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise MatrixFormatError(f"{path}:{line_no}: {line!r} is not a number") from None
    if not values:
        raise MatrixFormatError(f"{path} holds no values")
    return values


def read_target(path: PathLike) -> DiagonalTarget:
    """A prescribed diagonal, one value per line."""
    return DiagonalTarget(d=_read_values(path))


def read_samples(path: PathLike) -> np.ndarray:
    """Samples of a target function on 2^K equal cells."""
    values = np.asarray(_read_values(path))
    try:
        dyadic_core.level_of(values.size)
    except LevelMismatchError:
        raise MatrixFormatError(f"{path}: sample count {values.size} is not a power of two") from None
    return values


def records_frame(rows: Sequence[BaseModel]) -> pd.DataFrame:
    """One row per record, columns in field order."""
    return pd.DataFrame([row.model_dump(mode="json", by_alias=True) for row in rows])


def to_csv(rows: Sequence[BaseModel], columns: Sequence[str] = ()) -> str:
    frame = records_frame(rows)
    if columns:
        frame = frame.reindex(columns=list(columns))
    return frame.to_csv(index=False)
