"""
Post-check helpers for synthesized projections.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.errors import SynthesisError
from src.schemas import ProjectionCheck, ToleranceConfig

logger = logging.getLogger(__name__)

# selfadjointness of a constructed projection; construction symmetrizes, so only rounding remains
SYMMETRY_TOL = 1e-12


def _fro(X: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(X, X).real))


def check_projection(
    P: np.ndarray,
    d: Sequence[float],
    m: Optional[int] = None,
    cfg: Optional[ToleranceConfig] = None,
) -> ProjectionCheck:
    """
    Measure how far P is from a rank-m projection with diagonal d.

    Passes when P is selfadjoint to SYMMETRY_TOL, idempotent and spectrally
    0/1 to proj_tol, matches d entrywise to feas_tol, and has exactly m
    eigenvalues near 1 with trace m to feas_tol.
    """
    cfg = cfg or ToleranceConfig()
    P = np.asarray(P)
    d = np.asarray(d, dtype=float)
    n = P.shape[0]
    if m is None:
        m = int(round(float(d.sum())))

    symmetry_err = _fro(P - P.conj().T)
    idempotence_err = _fro(P @ P - P)
    diag_err = float(np.max(np.abs(np.diagonal(P) - d))) if n else 0.0
    eigvals = np.linalg.eigvalsh((P + P.conj().T) / 2)
    eig_err = float(np.max(np.minimum(np.abs(eigvals), np.abs(eigvals - 1.0)))) if n else 0.0
    rank = int(np.sum(eigvals > 0.5))
    trace_err = abs(float(np.trace(P).real) - m)

    passed = (
        symmetry_err <= SYMMETRY_TOL
        and idempotence_err <= cfg.proj_tol
        and diag_err <= cfg.feas_tol
        and eig_err <= cfg.proj_tol
        and rank == m
        and trace_err <= cfg.feas_tol
    )
    if not passed:
        logger.warning(
            "projection check failed: n=%d m=%d sym=%.3g idem=%.3g diag=%.3g eig=%.3g rank=%d",
            n, m, symmetry_err, idempotence_err, diag_err, eig_err, rank,
        )
    return ProjectionCheck(
        n=n,
        m=m,
        symmetry_err=symmetry_err,
        idempotence_err=idempotence_err,
        diag_err=diag_err,
        eig_err=eig_err,
        rank=rank,
        trace_err=trace_err,
        passed=passed,
    )


def require_projection(
    P: np.ndarray,
    d: Sequence[float],
    m: Optional[int] = None,
    cfg: Optional[ToleranceConfig] = None,
) -> ProjectionCheck:
    """Like check_projection, but a failed check raises SynthesisError."""
    check = check_projection(P, d, m, cfg)
    if not check.passed:
        raise SynthesisError(
            f"synthesized matrix failed its projection checks "
            f"(idempotence {check.idempotence_err:.3g}, diagonal {check.diag_err:.3g}, rank {check.rank}/{check.m})"
        )
    return check
