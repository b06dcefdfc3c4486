"""
Seeded experiments over many random seeds, and their summary statistics.
"""

import logging
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from src import dyadic_core, kadison_flow
from src.schemas import LAMBDA, ContractionRow, DistanceRow, PredictionRow

logger = logging.getLogger(__name__)

CONTRACTION_KINDS = ("general", "selfadjoint", "projection")
# tolerance of the closed-form diagonal against the iterated one
PREDICTION_TOL = 1e-10


def contraction_experiment(
    samples: int,
    rng: np.random.Generator,
    k_values: Sequence[int] = (1, 2, 3),
    max_level: int = 11,
    stop_tol: float = 1e-12,
    slack: float = 1e-9,
    progress: bool = False,
) -> List[ContractionRow]:
    """Iterate random general/selfadjoint/projection seeds and record their worst ratio."""
    rows = []
    for sample in tqdm(range(samples), desc="contraction", disable=not progress):
        kind = CONTRACTION_KINDS[sample % len(CONTRACTION_KINDS)]
        k = k_values[sample % len(k_values)]
        seed = kadison_flow.make_seed(kadison_flow.random_seed(kind, k, rng))
        trace, last = kadison_flow.run(seed, max_level=max_level, stop_tol=stop_tol)
        rows.append(
            ContractionRow(
                sample=sample,
                kind=kind,
                k=k,
                steps=len(trace.steps),
                final_level=last.level,
                max_ratio=kadison_flow.max_ratio(trace),
                bound_ok=kadison_flow.contraction_holds(trace, slack),
                truncated=trace.truncated,
            )
        )
    return rows


def prediction_experiment(
    samples: int,
    rng: np.random.Generator,
    k_values: Sequence[int] = (1, 2, 3),
    max_n: int = 9,
    max_level: int = 11,
    progress: bool = False,
) -> List[PredictionRow]:
    """Random real diagonal seeds: closed-form diagonal and limit deviation for n = 2..max_n."""
    rows = []
    for sample in tqdm(range(samples), desc="predict-diag", disable=not progress):
        k = int(rng.choice(k_values))
        d = rng.uniform(0.0, 1.0, size=2 ** k)
        cap = min(max_level, k + max_n - 1)
        max_gap = float(np.max(np.abs(d[1::2] - d[0::2])))
        for n, A_n in enumerate(kadison_flow.iterates(dyadic_core.diag_matrix(d), cap), start=1):
            if n == 1:
                continue
            predicted = kadison_flow.predicted_diagonal(d, k, n, max_level)
            observed = np.diagonal(A_n.entries)
            dev = kadison_flow.diag_deviation(A_n, d, k, n)
            rows.append(
                PredictionRow(
                    sample=sample,
                    k=k,
                    n=n,
                    level=A_n.level,
                    max_pred_err=float(np.max(np.abs(observed - predicted.values))),
                    sup_err=dev.sup_err,
                    sup_bound=max_gap / 2 ** n + PREDICTION_TOL,
                    even_exact=dev.even_exact,
                    odd_structured=dev.odd_structured,
                )
            )
    return rows


def distance_experiment(
    samples: int,
    rng: np.random.Generator,
    k: int = 2,
    max_level: int = 10,
    rel_tol: float = 1e-10,
    progress: bool = False,
) -> List[DistanceRow]:
    """Random general seed pairs iterated in lockstep."""
    rows = []
    for sample in tqdm(range(samples), desc="distance", disable=not progress):
        A = kadison_flow.random_seed("general", k, rng)
        B = kadison_flow.random_seed("general", k, rng)
        series = kadison_flow.verify_distance_scaling(A, B, max_level=max_level, rel_tol=rel_tol)
        errs = [abs(v - series.expected) / series.expected for v in series.values]
        rows.append(
            DistanceRow(
                sample=sample,
                k=k,
                expected=series.expected,
                max_rel_err=max(errs),
                constant=series.constant,
            )
        )
    return rows


def contraction_summary(rows: Sequence[ContractionRow]) -> Dict[str, object]:
    """Worst observed ratio, bound violations and truncation counts."""
    frame = pd.DataFrame([row.model_dump() for row in rows])
    if frame.empty:
        return {"count": 0, "max_ratio": None, "violations": 0, "truncated": 0, "lambda": LAMBDA}
    max_ratio = frame["max_ratio"].max()
    return {
        "count": int(len(frame)),
        "max_ratio": None if pd.isna(max_ratio) else float(max_ratio),
        "violations": int((~frame["bound_ok"]).sum()),
        "truncated": int(frame["truncated"].sum()),
        "lambda": LAMBDA,
    }


def prediction_summary(rows: Sequence[PredictionRow]) -> Dict[str, bool]:
    frame = pd.DataFrame([row.model_dump() for row in rows])
    if frame.empty:
        return {"closed_form": True, "even_exact": True, "odd_structured": True, "sup_bound": True}
    return {
        "closed_form": bool((frame["max_pred_err"] <= PREDICTION_TOL).all()),
        "even_exact": bool(frame["even_exact"].all()),
        "odd_structured": bool(frame["odd_structured"].all()),
        "sup_bound": bool((frame["sup_err"] <= frame["sup_bound"]).all()),
    }
