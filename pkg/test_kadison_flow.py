"""
Tests for the Kadison iteration, the closed-form diagonal and the limit diagonal.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.insert(0, str(Path(__file__).parent))

from src import dyadic_core, kadison_flow
from src.errors import ConfigError, DomainError, IndexOutOfRangeError, LevelMismatchError, LevelOverflowError
from src.schemas import LAMBDA

DIAG01 = dyadic_core.diag_matrix([0.0, 1.0])

seeded_diagonals = st.integers(1, 2).flatmap(
    lambda k: st.tuples(st.just(k), arrays(np.float64, 2 ** k, elements=st.floats(0.0, 1.0)))
)


def test_step_examples():
    A2 = kadison_flow.step(DIAG01)
    assert np.allclose(np.diagonal(A2.entries).real, [0, 0.5, 0.5, 1], atol=1e-15)
    A3 = kadison_flow.step(A2)
    assert np.allclose(np.diagonal(A3.entries).real, [0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1], atol=1e-15)
    I = dyadic_core.identity(2)
    assert np.allclose(kadison_flow.step(I).entries, np.eye(8), atol=1e-15)


def test_step_respects_level_cap():
    with pytest.raises(LevelOverflowError):
        kadison_flow.step(dyadic_core.identity(3), max_level=3)


def test_run_from_diag01():
    trace, last = kadison_flow.run(kadison_flow.make_seed(DIAG01), max_level=6)
    assert [s.n for s in trace.steps] == [2, 3, 4, 5, 6]
    assert [s.level for s in trace.steps] == [2, 3, 4, 5, 6]
    assert trace.steps[0].delta == pytest.approx(0.25, abs=1e-12)
    assert trace.steps[0].ratio == pytest.approx(LAMBDA, abs=1e-12)
    assert trace.steps[1].delta == pytest.approx((2.5 - np.sqrt(2)) / 8, abs=1e-12)
    assert trace.steps[-1].ratio is None
    assert trace.truncated
    assert last.level == 6
    assert all(r <= LAMBDA + 1e-9 for r in trace.ratios if r is not None)
    assert kadison_flow.contraction_holds(trace)
    assert kadison_flow.cauchy_tail_check(trace)
    assert trace.model_dump(by_alias=True)["lambda"] == LAMBDA


def test_identity_stops_immediately():
    trace, last = kadison_flow.run(kadison_flow.make_seed(dyadic_core.identity(1)), max_level=8)
    assert len(trace.steps) == 1
    assert trace.steps[0].delta < 1e-12
    assert trace.steps[0].ratio is None
    assert not trace.truncated
    assert last.level == 2


def test_seed_must_leave_room_below_cap():
    with pytest.raises(LevelOverflowError):
        kadison_flow.run(kadison_flow.make_seed(dyadic_core.identity(3)), max_level=3)


@pytest.mark.parametrize("kind", ["general", "selfadjoint", "projection", "diagonal"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_random_seeds_contract(kind, k):
    rng = np.random.default_rng(100 * k + len(kind))
    seed = kadison_flow.make_seed(kadison_flow.random_seed(kind, k, rng))
    trace, _ = kadison_flow.run(seed, max_level=8)
    assert kadison_flow.contraction_holds(trace, slack=1e-9)
    assert kadison_flow.cauchy_tail_check(trace)
    ratio = kadison_flow.max_ratio(trace)
    assert ratio is None or ratio <= LAMBDA + 1e-9


def test_random_seed_kinds():
    rng = np.random.default_rng(5)
    P = kadison_flow.random_seed("projection", 3, rng).entries
    assert np.allclose(P @ P, P, atol=1e-12)
    H = kadison_flow.random_seed("selfadjoint", 2, rng).entries
    assert np.allclose(H, H.conj().T)
    with pytest.raises(DomainError):
        kadison_flow.random_seed("unitary", 2, rng)


def test_named_seeds():
    rng = np.random.default_rng(0)
    assert np.array_equal(kadison_flow.named_seed("diag01", 1, rng).entries, DIAG01.entries)
    assert np.array_equal(kadison_flow.named_seed("identity", 2, rng).entries, np.eye(4))
    with pytest.raises(ConfigError):
        kadison_flow.named_seed("diag01", 2, rng)
    with pytest.raises(ConfigError):
        kadison_flow.named_seed("nope", 1, rng)


def test_gamma():
    d = [0.2, 0.6, 1.0, 0.0]
    assert kadison_flow.gamma(d, 1, 0, 3) == 0.2
    assert kadison_flow.gamma(d, 1, 4, 3) == 0.6
    assert kadison_flow.gamma(d, 1, 2, 3) == pytest.approx(0.4)
    assert kadison_flow.gamma(d, 2, 1, 3) == pytest.approx(0.75)
    with pytest.raises(IndexOutOfRangeError):
        kadison_flow.gamma(d, 3, 0, 3)
    with pytest.raises(IndexOutOfRangeError):
        kadison_flow.gamma(d, 1, 5, 3)


def test_predicted_diagonal_example():
    predicted = kadison_flow.predicted_diagonal([0.0, 1.0], 1, 3)
    assert predicted.level == 3
    assert np.allclose(predicted.real, [0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1])
    assert np.array_equal(kadison_flow.predicted_diagonal([0.3, 0.8], 1, 1).real, [0.3, 0.8])


@settings(max_examples=20, deadline=None)
@given(seeded_diagonals, st.integers(2, 5))
def test_predicted_diagonal_matches_iteration(seeded, n):
    k, d = seeded
    for index, A_n in enumerate(kadison_flow.iterates(dyadic_core.diag_matrix(d), k + n - 1), start=1):
        if index < 2:
            continue
        predicted = kadison_flow.predicted_diagonal(d, k, index)
        assert np.max(np.abs(np.diagonal(A_n.entries) - predicted.values)) <= 1e-10
        dev = kadison_flow.diag_deviation(A_n, d, k, index)
        assert dev.even_exact
        assert dev.odd_structured
        max_gap = np.max(np.abs(d[1::2] - d[0::2]))
        assert dev.sup_err <= max_gap / 2 ** index + 1e-10


def test_f_eval_conventions():
    d = [0.0, 1.0, 0.2, 0.4]
    assert kadison_flow.f_eval(0.25, d, 2) == pytest.approx(0.5)
    assert kadison_flow.f_eval(0.5, d, 2) == pytest.approx(0.2)
    assert kadison_flow.f_eval(0.5, d, 2, side="left") == pytest.approx(1.0)
    assert kadison_flow.f_eval(1.0, d, 2) == pytest.approx(0.4)
    assert kadison_flow.f_eval(0.0, d, 2, side="left") == 0.0
    assert kadison_flow.f_eval(0.5, [0.0, 1.0], 1) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        kadison_flow.f_eval(1.5, d, 2)
    with pytest.raises(LevelMismatchError):
        kadison_flow.f_eval(0.5, [0.0, 1.0, 0.5], 2)


def test_limit_samples_use_closed_segments():
    samples = kadison_flow.limit_samples([0.0, 1.0, 0.2, 0.4], 2, 3)
    assert np.allclose(samples, [0.25, 0.5, 0.75, 1.0, 0.25, 0.3, 0.35, 0.4])


def test_diag_deviation_checks_level():
    with pytest.raises(LevelMismatchError):
        kadison_flow.diag_deviation(dyadic_core.identity(3), [0.0, 1.0], 1, 2)


def test_distance_scaling_is_constant():
    rng = np.random.default_rng(11)
    A = kadison_flow.random_seed("general", 2, rng)
    B = kadison_flow.random_seed("general", 2, rng)
    series = kadison_flow.verify_distance_scaling(A, B, max_level=7)
    assert series.levels == [2, 3, 4, 5, 6, 7]
    assert series.constant
    assert series.expected == pytest.approx(dyadic_core.fro_sq(B.entries - A.entries) / 4)
    with pytest.raises(LevelMismatchError):
        kadison_flow.verify_distance_scaling(A, dyadic_core.identity(1))


def test_projection_structure_is_preserved():
    rng = np.random.default_rng(2)
    P = kadison_flow.random_seed("projection", 2, rng)
    report = kadison_flow.structure_report(P, max_level=8)
    assert report.seed_flags.projection
    assert report.preserved
    assert report.levels == list(range(2, 9))
    assert report.max_idempotence_err <= 1e-8


def test_first_step_diagonal_depends_on_diagonal_only():
    rng = np.random.default_rng(4)
    A = kadison_flow.random_seed("general", 3, rng)
    assert kadison_flow.diag_locality_gap(A) <= 1e-15


def test_run_deltas_measure_each_step_against_the_embedded_predecessor():
    A = kadison_flow.random_seed("general", 2, np.random.default_rng(12))
    trace, _ = kadison_flow.run(kadison_flow.make_seed(A), max_level=7, stop_tol=0.0)
    chain = list(kadison_flow.iterates(A, 7))
    for record, prev, cur in zip(trace.steps, chain, chain[1:]):
        expected = dyadic_core.fro_sq(cur.entries - dyadic_core.embed(prev, 7).entries) / cur.dim
        assert record.level == cur.level
        assert record.delta == pytest.approx(expected, rel=1e-12, abs=1e-15)


@pytest.mark.slow
def test_projection_structure_is_preserved_to_level_11():
    P = kadison_flow.random_seed("projection", 2, np.random.default_rng(2))
    report = kadison_flow.structure_report(P, max_level=11)
    assert report.preserved
    assert report.levels[-1] == 11
    assert report.max_idempotence_err <= 1e-8
