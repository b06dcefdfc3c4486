"""
Deterministic PASS/FAIL decisions for verification commands.

Every verification command reduces its measurements to named boolean checks;
this module turns those checks into a Verdict, an exit code and a
human-readable rationale. The same checks always give the same verdict.
"""

import logging
from typing import Dict, List, Mapping

from src.schemas import LAMBDA, Verdict

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

LAMBDA_DISPLAY = f"lambda = 5/4 - sqrt(2)/2 = {LAMBDA:.16f}"


def apply_decision_logic(command: str, checks: Mapping[str, bool], constant: str = LAMBDA_DISPLAY) -> Verdict:
    """
    Reduce named checks to a verdict.

    The command passes iff every check passes; an empty check set passes.
    """
    verdict = Verdict(command=command, passed=all(checks.values()), checks=dict(checks), constant=constant)
    if not verdict.passed:
        failed = [name for name, ok in checks.items() if not ok]
        logger.warning("%s failed checks: %s", command, ", ".join(failed))
    return verdict


def exit_code(verdict: Verdict) -> int:
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def get_decision_rationale(verdict: Verdict) -> str:
    """
    One line per check plus the outcome, e.g.

        iterate: PASS
          contraction ............ ok
        lambda = 5/4 - sqrt(2)/2 = 0.5428932188134525
    """
    lines = [f"{verdict.command}: {'PASS' if verdict.passed else 'FAIL'}"]
    width = max((len(name) for name in verdict.checks), default=0) + 4
    for name, ok in verdict.checks.items():
        lines.append(f"  {name} {'.' * (width - len(name))} {'ok' if ok else 'FAILED'}")
    if verdict.constant:
        lines.append(verdict.constant)
    return "\n".join(lines)


def validate_output_consistency(outputs: List[str]) -> Dict[str, object]:
    """
    Compare repeated renderings of the same run.

    Used to confirm byte-identical output across runs with the same flags.
    """
    if not outputs:
        return {"consistency": 1.0, "all_outputs_same": True, "distinct": 0}
    distinct = len(set(outputs))
    same = sum(1 for out in outputs if out == outputs[0])
    return {
        "consistency": same / len(outputs),
        "all_outputs_same": distinct == 1,
        "distinct": distinct,
    }
