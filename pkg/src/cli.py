"""
Command-line entry point for the dyadic carpenter laboratory.

    python -m src.cli <command> [flags]

Commands:
1. iterate       run the Kadison iteration from a seed and report its trace
2. predict-diag  closed-form iterate diagonals against the iterated ones
3. contraction   worst step ratio over random seeds against lambda
4. distance      lockstep distance scaling over random seed pairs
5. exact-check   the 2x2 distance identities in exact arithmetic
6. carpenter     projection with a prescribed diagonal (Givens chain)
7. circulant     projection with constant diagonal m/n
8. strategy      chains of projections and their coherence ratios

JSON is written to stdout unless --out is given. `iterate` writes the bare
trace (k, lambda, steps, truncated, plus structure with --check-structure);
the other commands wrap their result with the command name and verdict. For `carpenter` and
`circulant`, --out names the matrix file and the JSON report goes to stdout.
Exit codes: 0 PASS, 1 FAIL, 2 usage or input error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from src import carpenter_synth, config, evaluate, exact_field, kadison_flow, matrix_io, strategy_explorer
from src.decision_logic import EXIT_FAIL, EXIT_USAGE, LAMBDA_DISPLAY, apply_decision_logic, exit_code, get_decision_rationale
from src.errors import CarpenterError, ConfigError, SynthesisError
from src.schemas import LAMBDA, MatrixAtLevel, RunConfig, ToleranceConfig, Verdict
from src.validation import check_projection

logger = logging.getLogger(__name__)

# (result document, table rows for CSV, verdict, matrix to write for --out)
Outcome = Tuple[Dict[str, object], Optional[Sequence[BaseModel]], Verdict, Optional[np.ndarray]]

RATIO_COLUMNS = ("k", "mass", "fro_dist_to_embed_prev", "r_k")
# tolerance of the diag(0, 1) oracle values delta_2 = 1/4 and delta_3/delta_2 = lambda
ORACLE_TOL = 1e-12


def _progress() -> bool:
    return logging.getLogger().getEffectiveLevel() <= logging.INFO


def _rng(run: RunConfig) -> np.random.Generator:
    return np.random.default_rng(run.rng_seed)


def _is_diagonal(A: MatrixAtLevel) -> bool:
    off = A.entries - np.diag(np.diagonal(A.entries))
    return not np.any(off)


def _load_seed(name: str, k: int, rng: np.random.Generator) -> MatrixAtLevel:
    if name in kadison_flow.NAMED_SEEDS:
        return kadison_flow.named_seed(name, k, rng)
    return matrix_io.read_matrix(name)


def cmd_iterate(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    A = _load_seed(args.seed_matrix, run.k, _rng(run))
    seed = kadison_flow.make_seed(A)
    trace, last = kadison_flow.run(seed, max_level=run.max_level, stop_tol=run.tol)
    checks = {
        "contraction": kadison_flow.contraction_holds(trace, cfg.ratio_slack),
        "cauchy_tail": kadison_flow.cauchy_tail_check(trace, cfg.ratio_slack),
    }
    if seed.d is not None and _is_diagonal(A):
        dev = kadison_flow.diag_deviation(last, seed.d, seed.k, trace.steps[-1].n)
        checks["limit_diagonal"] = dev.even_exact and dev.odd_structured
    result: Dict[str, object] = trace.model_dump(mode="json", by_alias=True)
    if args.check_structure:
        report = kadison_flow.structure_report(A, max_level=run.max_level, cfg=cfg)
        checks["structure_preserved"] = report.preserved
        result["structure"] = report.model_dump(mode="json")
    return result, trace.steps, apply_decision_logic("iterate", checks), None


def cmd_predict_diag(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    rows = evaluate.prediction_experiment(
        run.samples, _rng(run), max_n=args.max_n, max_level=run.max_level, progress=_progress()
    )
    checks = evaluate.prediction_summary(rows)
    result = {"rows": [row.model_dump(mode="json") for row in rows]}
    return result, rows, apply_decision_logic("predict-diag", checks), None


def cmd_contraction(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    rows = evaluate.contraction_experiment(
        run.samples,
        _rng(run),
        max_level=run.max_level,
        stop_tol=run.tol,
        slack=cfg.ratio_slack,
        progress=_progress(),
    )
    summary = evaluate.contraction_summary(rows)
    oracle, _ = kadison_flow.run(kadison_flow.make_seed(kadison_flow.named_seed("diag01", 1, _rng(run))), run.max_level)
    first = oracle.steps[0]
    checks = {
        "ratio_bound": summary["violations"] == 0,
        "diag01_delta2": abs(first.delta - 0.25) <= ORACLE_TOL,
        "diag01_ratio": first.ratio is not None and abs(first.ratio - LAMBDA) <= ORACLE_TOL,
    }
    result = {
        "summary": summary,
        "diag01": oracle.model_dump(mode="json", by_alias=True),
        "rows": [row.model_dump(mode="json") for row in rows],
    }
    return result, rows, apply_decision_logic("contraction", checks), None


def cmd_distance(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    rows = evaluate.distance_experiment(run.samples, _rng(run), k=run.k, max_level=run.max_level, progress=_progress())
    checks = {"constant_series": all(row.constant for row in rows)}
    result = {"rows": [row.model_dump(mode="json") for row in rows]}
    return result, rows, apply_decision_logic("distance", checks), None


def cmd_exact_check(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    report = exact_field.run_exact_suite(run.samples, run.rng_seed, progress=_progress())
    checks = {"identities": report.failures == 0, "ratio_bound": report.ratio_bound_violations == 0}
    constant = f"{LAMBDA_DISPLAY} (exact {report.lambda_exact})"
    verdict = apply_decision_logic("exact-check", checks, constant=constant)
    return report.model_dump(mode="json"), report.first_sample, verdict, None


def cmd_carpenter(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    if args.target is not None:
        target = matrix_io.read_target(args.target)
    else:
        target = carpenter_synth.random_feasible_target(args.random, _rng(run))
    synthesis = carpenter_synth.horn_projection(target, cfg)
    checks = {
        "projection": synthesis.check.passed,
        "rotation_count": synthesis.rotations <= max(target.n - 1, 0),
    }
    result = {
        "target": target.d,
        "rotations": synthesis.rotations,
        "check": synthesis.check.model_dump(mode="json"),
    }
    return result, [synthesis.check], apply_decision_logic("carpenter", checks, constant=""), synthesis.matrix


def cmd_circulant(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    result: Dict[str, object] = {}
    if args.alpha is not None:
        approx = carpenter_synth.dyadic_constant_target(args.alpha, run.k)
        n, m = 2 ** approx.k, approx.m
        result["approximation"] = approx.model_dump(mode="json")
    elif args.n is not None and args.m is not None:
        n, m = args.n, args.m
    else:
        raise ConfigError("circulant needs --n and --m, or --alpha with --k")
    synthesis = carpenter_synth.circulant_synthesis(n, m, cfg)
    diag_gap = float(np.max(np.abs(np.diagonal(synthesis.matrix) - m / n)))
    checks = {"projection": synthesis.check.passed, "constant_diagonal": diag_gap <= 1e-13}
    if n >= 2:
        checks["orthogonality"] = carpenter_synth.orthogonality_check(n)
    result.update(
        {"n": n, "m": m, "diagonal": m / n, "diagonal_gap": diag_gap, "check": synthesis.check.model_dump(mode="json")}
    )
    return result, [synthesis.check], apply_decision_logic("circulant", checks, constant=""), synthesis.matrix


def cmd_strategy(args: argparse.Namespace, run: RunConfig, cfg: ToleranceConfig) -> Outcome:
    if args.samples_file is not None:
        g = strategy_explorer.sampled_function(matrix_io.read_samples(args.samples_file))
        name = str(args.samples_file)
    else:
        g = strategy_explorer.builtin_function(args.function)
        name = args.function

    if args.heuristic == "kadison":
        seed = _load_seed(args.seed_matrix, 1, _rng(run))
        chain = strategy_explorer.iteration_chain(seed, args.k_max, run.max_level)
        report = strategy_explorer.ratio_report(chain, max_level=run.max_level)
        checks = {
            "ratio_bound": all(row.r_k is None or row.r_k <= LAMBDA + cfg.ratio_slack for row in report.rows),
        }
    else:
        if args.heuristic == "embed":
            head = strategy_explorer.synthesize_chain(
                g, args.k_min, min(args.k_min + 1, args.k_max), "fresh", cfg, name, run.max_level
            )
            chain = strategy_explorer.extend_by_embedding(head, args.k_max, run.max_level)
        else:
            chain = strategy_explorer.synthesize_chain(
                g, args.k_min, args.k_max, args.heuristic, cfg, name, run.max_level
            )
        report = strategy_explorer.ratio_report(chain, g, max_level=run.max_level)
        checks = {
            "chain_valid": all(check_projection(link.matrix.entries, link.target, cfg=cfg).passed for link in chain.links),
        }
    return report.model_dump(mode="json"), report.rows, apply_decision_logic("strategy", checks), None


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig, ToleranceConfig], Outcome]] = {
    "iterate": cmd_iterate,
    "predict-diag": cmd_predict_diag,
    "contraction": cmd_contraction,
    "distance": cmd_distance,
    "exact-check": cmd_exact_check,
    "carpenter": cmd_carpenter,
    "circulant": cmd_circulant,
    "strategy": cmd_strategy,
}

MATRIX_COMMANDS = ("carpenter", "circulant")
# commands whose JSON is the result itself, the verdict going to the rationale only
BARE_COMMANDS = ("iterate",)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="Output file (matrix file for carpenter/circulant)")
    common.add_argument("--format", choices=["json", "csv"], default="json", dest="output_format")
    common.add_argument("--rng-seed", type=int, default=0)
    common.add_argument("--log-level", default=None, help="Logging level (default CARPENTER_LOG_LEVEL or WARNING)")
    common.add_argument("--max-level", type=int, default=None, help="Level cap (default CARPENTER_MAX_LEVEL or 11)")

    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description="Dyadic carpenter laboratory: Kadison iteration and prescribed-diagonal projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iterate", parents=[common], help="Run the Kadison iteration from a seed")
    p.add_argument("--k", type=int, default=1, help="Seed level")
    p.add_argument("--seed-matrix", default="diag01", help="diag01, identity, rand-sa, rand-proj or a matrix file")
    p.add_argument("--tol", type=float, default=1e-12, help="Stop once delta falls below this")
    p.add_argument("--check-structure", action="store_true", help="Classify every iterate")

    p = sub.add_parser("predict-diag", parents=[common], help="Closed-form diagonals against dense iteration")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--max-n", type=int, default=9)

    p = sub.add_parser("contraction", parents=[common], help="Step ratios over random seeds")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("distance", parents=[common], help="Lockstep distance scaling")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--k", type=int, default=2)

    p = sub.add_parser("exact-check", parents=[common], help="Exact identities over random rational matrices")
    p.add_argument("--samples", type=int, default=50)

    p = sub.add_parser("carpenter", parents=[common], help="Projection with a prescribed diagonal")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--target", type=Path, help="Diagonal file, one value per line")
    source.add_argument("--random", type=int, help="Random feasible target of this size")

    p = sub.add_parser("circulant", parents=[common], help="Projection with constant diagonal")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None, help="Constant to approximate by m/2^k")
    p.add_argument("--k", type=int, default=1)

    p = sub.add_parser("strategy", parents=[common], help="Projection chains and coherence ratios")
    p.add_argument("--function", default="linear", help="linear, square, const:<v> or step:<t0>")
    p.add_argument("--samples-file", type=Path, default=None, help="2^K samples of the target function")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--heuristic", choices=["fresh", "phase_align", "embed", "kadison"], default="fresh")
    p.add_argument("--seed-matrix", default="diag01", help="Seed of the kadison chain")
    return parser


def _input_path(args: argparse.Namespace) -> Optional[Path]:
    for name in ("target", "samples_file"):
        value = getattr(args, name, None)
        if value is not None:
            return value
    seed = getattr(args, "seed_matrix", None)
    if seed is not None and seed not in kadison_flow.NAMED_SEEDS:
        return Path(seed)
    return None


def _run_config(args: argparse.Namespace) -> RunConfig:
    max_level = args.max_level if args.max_level is not None else config.get_max_level()
    if not 1 <= max_level <= config.HARD_MAX_LEVEL:
        raise ConfigError(f"--max-level must lie in 1..{config.HARD_MAX_LEVEL}, got {max_level}")
    return RunConfig(
        command=args.command,
        samples=getattr(args, "samples", 1),
        input_path=_input_path(args),
        output_path=args.out,
        k=getattr(args, "k", 1),
        max_level=max_level,
        tol=getattr(args, "tol", 1e-12),
        rng_seed=args.rng_seed,
        output_format=args.output_format,
    )


def _render(run: RunConfig, document: Dict[str, object], rows: Optional[Sequence[BaseModel]]) -> str:
    if run.output_format == "csv":
        if rows is None:
            raise ConfigError(f"{run.command} has no tabular output; use --format json")
        columns: List[str] = list(RATIO_COLUMNS) if run.command == "strategy" else []
        return matrix_io.to_csv(rows, columns)
    return json.dumps(document, indent=2) + "\n"


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE

    try:
        level_name = (args.log_level or config.get_log_level()).upper()
        if not isinstance(logging.getLevelName(level_name), int):
            raise ConfigError(f"unknown log level {level_name!r}")
        logging.basicConfig(
            level=level_name,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )
        run = _run_config(args)
        logger.info("running %s", run.command)
        result, rows, verdict, matrix = COMMANDS[run.command](args, run, ToleranceConfig())
        if run.command in BARE_COMMANDS:
            document = result
        else:
            document = {"command": run.command, "verdict": verdict.model_dump(mode="json"), "result": result}

        if run.command in MATRIX_COMMANDS:
            if run.output_path is not None:
                matrix_io.write_matrix(run.output_path, matrix)
            sys.stdout.write(_render(run, document, rows))
            print(get_decision_rationale(verdict), file=sys.stderr)
        elif run.output_path is not None:
            run.output_path.write_text(_render(run, document, rows))
            print(get_decision_rationale(verdict))
        else:
            sys.stdout.write(_render(run, document, rows))
            print(get_decision_rationale(verdict), file=sys.stderr)
    except ValidationError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CarpenterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return exit_code(verdict)


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
