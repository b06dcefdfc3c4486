"""
Tests for target discretization, phase alignment and chain coherence reports.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src import dyadic_core, kadison_flow, strategy_explorer
from src.errors import ChainTooShortError, DomainError, LevelMismatchError, LevelOverflowError
from src.schemas import LAMBDA, MatrixAtLevel


def test_discretize_linear_is_exact():
    step = strategy_explorer.discretize(strategy_explorer.builtin_function("linear"), 2)
    assert step.mass == 2
    assert np.allclose(step.values, [0.125, 0.375, 0.625, 0.875], atol=1e-15)


def test_discretize_square_rounds_mass():
    step = strategy_explorer.discretize(strategy_explorer.builtin_function("square"), 1)
    assert step.mass == 1
    assert np.allclose(step.values, [0.25, 0.75], atol=1e-12)


def test_discretize_constant_redistributes_mass():
    step = strategy_explorer.discretize(strategy_explorer.builtin_function("const:0.3"), 2)
    assert step.mass == 1
    assert np.allclose(step.values, [0.25] * 4, atol=1e-15)


def test_discretize_clamps_and_spreads_excess():
    step = strategy_explorer.discretize(strategy_explorer.builtin_function("step:0.5"), 1)
    assert step.values == [0.0, 1.0]
    step = strategy_explorer.discretize(strategy_explorer.sampled_function([1.0, 1.0, 0.9, 0.0]), 2)
    assert step.mass == 3
    assert all(0.0 <= v <= 1.0 for v in step.values)
    assert sum(step.values) == pytest.approx(3.0, abs=1e-12)


def test_function_errors():
    with pytest.raises(DomainError):
        strategy_explorer.builtin_function("cubic")
    with pytest.raises(DomainError):
        strategy_explorer.builtin_function("const:x")
    with pytest.raises(DomainError):
        strategy_explorer.discretize(strategy_explorer.builtin_function("const:1.5"), 2)
    with pytest.raises(LevelMismatchError):
        strategy_explorer.sampled_function([0.0, 1.0, 0.5])


def test_l2_gap_shrinks_with_level():
    g = strategy_explorer.builtin_function("linear")
    gaps = [strategy_explorer.l2_gap(g, strategy_explorer.discretize(g, k)) for k in (1, 2, 3, 4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_phase_align_example():
    A = MatrixAtLevel(level=1, entries=np.array([[0.5, 0.5j], [-0.5j, 0.5]]))
    T = MatrixAtLevel(level=1, entries=np.full((2, 2), 0.5))
    aligned = strategy_explorer.phase_align(A, T)
    assert np.allclose(aligned.entries, T.entries, atol=1e-15)


def test_phase_align_keeps_an_already_aligned_matrix():
    A = kadison_flow.random_seed("projection", 2, np.random.default_rng(1))
    aligned = strategy_explorer.phase_align(A, A)
    assert np.allclose(aligned.entries, A.entries, atol=1e-15)


def test_phase_align_never_increases_distance():
    rng = np.random.default_rng(8)
    for _ in range(5):
        A = kadison_flow.random_seed("projection", 3, rng)
        T = kadison_flow.random_seed("projection", 3, rng)
        aligned = strategy_explorer.phase_align(A, T)
        before = dyadic_core.fro_sq(A.entries - T.entries)
        after = dyadic_core.fro_sq(aligned.entries - T.entries)
        assert after <= before + 1e-12
        assert np.array_equal(np.diagonal(aligned.entries), np.diagonal(A.entries))
    with pytest.raises(DomainError):
        strategy_explorer.phase_align(A, dyadic_core.identity(2))


@pytest.mark.parametrize("heuristic", ["fresh", "phase_align"])
def test_chain_links_are_projections_with_the_target_diagonal(heuristic):
    g = strategy_explorer.builtin_function("linear")
    chain = strategy_explorer.synthesize_chain(g, 1, 5, heuristic, function_name="linear")
    assert [link.k for link in chain.links] == [1, 2, 3, 4, 5]
    for link in chain.links:
        P = link.matrix.entries
        assert np.allclose(P @ P, P, atol=1e-8)
        assert np.allclose(np.diagonal(P).real, link.target, atol=1e-9)
    report = strategy_explorer.ratio_report(chain, g)
    assert report.function == "linear"
    assert report.heuristic == heuristic
    assert report.rows[0].r_k is None and report.rows[-1].r_k is None
    assert report.rows[0].fro_dist_to_embed_prev is None
    assert [row.mass for row in report.rows] == [1, 2, 4, 8, 16]
    assert all(row.l2_gap is not None for row in report.rows)


def test_chain_argument_errors():
    g = strategy_explorer.builtin_function("linear")
    with pytest.raises(DomainError):
        strategy_explorer.synthesize_chain(g, 3, 2)
    with pytest.raises(DomainError):
        strategy_explorer.synthesize_chain(g, 1, 3, "greedy")


def test_embedded_extension_has_zero_then_undefined_ratios():
    g = strategy_explorer.builtin_function("linear")
    chain = strategy_explorer.extend_by_embedding(strategy_explorer.synthesize_chain(g, 1, 2), 5)
    assert chain.heuristic == "fresh+embed"
    assert [link.k for link in chain.links] == [1, 2, 3, 4, 5]
    report = strategy_explorer.ratio_report(chain)
    assert report.rows[1].r_k == 0.0
    assert [row.r_k for row in report.rows[2:]] == [None, None, None]
    assert report.limsup_estimate == 0.0


def test_short_chains_are_rejected():
    chain = strategy_explorer.synthesize_chain(strategy_explorer.builtin_function("linear"), 1, 2)
    with pytest.raises(ChainTooShortError):
        strategy_explorer.ratio_report(chain)


def test_iteration_chain_ratios_match_the_trace():
    seed = dyadic_core.diag_matrix([0.0, 1.0])
    chain = strategy_explorer.iteration_chain(seed, 7)
    assert chain.heuristic == "kadison"
    report = strategy_explorer.ratio_report(chain)
    trace, _ = kadison_flow.run(kadison_flow.make_seed(seed), max_level=7)
    by_level = {step.level: step.ratio for step in trace.steps}
    for row in report.rows:
        if row.r_k is not None:
            assert row.r_k == pytest.approx(by_level[row.k], abs=1e-12)
            assert row.r_k <= LAMBDA + 1e-9
    assert 0 < report.limsup_estimate <= LAMBDA + 1e-9


def test_ratio_report_embeds_up_to_the_chain_cap(monkeypatch):
    monkeypatch.setenv("CARPENTER_MAX_LEVEL", "4")
    chain = strategy_explorer.iteration_chain(dyadic_core.diag_matrix([0.0, 1.0]), 6, max_level=6)
    with pytest.raises(LevelOverflowError):
        strategy_explorer.ratio_report(chain)
    report = strategy_explorer.ratio_report(chain, max_level=6)
    assert [row.k for row in report.rows] == [1, 2, 3, 4, 5, 6]
    assert report.rows[-2].r_k is not None


@pytest.mark.slow
def test_iteration_chain_report_at_level_12():
    chain = strategy_explorer.iteration_chain(dyadic_core.diag_matrix([0.0, 1.0]), 12, max_level=12)
    report = strategy_explorer.ratio_report(chain, max_level=12)
    assert report.rows[-1].k == 12
    assert all(row.r_k is None or row.r_k <= LAMBDA + 1e-9 for row in report.rows)
