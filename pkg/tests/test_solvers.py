"""
LP backend tests: both adapters solve the same small programs and
report duals as d(objective)/d(rhs) under minimization.
"""

import itertools

import numpy as np
import pytest
from scipy.optimize import OptimizeResult, linprog

from core.exceptions import BackendError, DimensionMismatchError
from core.solvers import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    LinearProgramBuilder,
    LPBackend,
    SolveResult,
    clean_planning,
    get_backend,
    HighsBackend,
    ReferenceBackend,
)
from core.solvers import highs as highs_module


def _two_row_lp():
    # min -x - y  s.t.  x + 2y <= 4,  3x + y <= 6
    builder = LinearProgramBuilder("two-row")
    cols = builder.add_columns([-1.0, -1.0], 0.0, np.inf)
    builder.add_rows(np.array([[1.0, 2.0], [3.0, 1.0]]), cols, LE, [4.0, 6.0])
    return builder.build()


def test_lp_optimum_and_le_duals(backend):
    result = backend.solve_lp(_two_row_lp(), need_duals=True)
    assert result.status == OPTIMAL
    np.testing.assert_allclose(result.primal, [1.6, 1.2], atol=1e-7)
    assert result.objective == pytest.approx(-2.8)
    np.testing.assert_allclose(result.duals, [-0.4, -0.2], atol=1e-7)


def test_equality_and_ge_dual_signs(backend):
    builder = LinearProgramBuilder("signs")
    cols = builder.add_columns([2.0, 1.0], -np.inf, np.inf)
    builder.add_rows(np.array([[1.0, 0.0]]), cols, EQ, [3.0])
    builder.add_rows(np.array([[0.0, 1.0]]), cols, GE, [5.0])
    result = backend.solve_lp(builder.build(), need_duals=True)
    assert result.status == OPTIMAL
    assert result.objective == pytest.approx(11.0)
    np.testing.assert_allclose(result.duals, [2.0, 1.0], atol=1e-7)


def test_infeasible_lp(backend):
    builder = LinearProgramBuilder("infeasible")
    cols = builder.add_columns([1.0], 0.0, np.inf)
    builder.add_rows(np.array([[1.0]]), cols, GE, [2.0])
    builder.add_rows(np.array([[1.0]]), cols, LE, [1.0])
    assert backend.solve_lp(builder.build()).status == INFEASIBLE


def test_milp_rounds_to_integer_optimum(backend):
    builder = LinearProgramBuilder("knapsack")
    cols = builder.add_columns([-1.0, -1.0], 0.0, 10.0, integer=[True, True])
    builder.add_rows(np.array([[2.0, 2.0]]), cols, LE, [5.0])
    lp = builder.build()
    result = backend.solve_milp(lp)
    assert result.status == OPTIMAL
    assert result.objective == pytest.approx(-2.0)
    assert result.duals is None
    np.testing.assert_array_equal(result.primal, np.round(result.primal))

    relaxed = backend.solve_lp(lp.relaxed())
    assert relaxed.objective == pytest.approx(-2.5)


def test_solve_dispatches_on_integrality():
    backend = HighsBackend()
    lp = _two_row_lp()
    assert backend.solve(lp).status == OPTIMAL
    with pytest.raises(ValueError):
        backend.solve_milp(lp)


def test_backends_agree_on_random_lps():
    rng = np.random.default_rng(5)
    for _ in range(5):
        builder = LinearProgramBuilder("random")
        cols = builder.add_columns(rng.uniform(-1.0, 1.0, 4), 0.0, 5.0)
        builder.add_rows(rng.uniform(0.1, 1.0, (3, 4)), cols, LE, rng.uniform(1.0, 3.0, 3))
        lp = builder.build()
        highs = HighsBackend().solve_lp(lp)
        reference = ReferenceBackend().solve_lp(lp)
        assert highs.objective == pytest.approx(reference.objective, abs=1e-7)


def test_builder_rejects_mismatched_blocks():
    builder = LinearProgramBuilder("bad")
    cols = builder.add_columns([1.0, 1.0], 0.0, 1.0)
    with pytest.raises(DimensionMismatchError):
        builder.add_rows(np.ones((2, 2)), cols, LE, [1.0])
    with pytest.raises(DimensionMismatchError):
        builder.add_rows(np.ones((1, 3)), cols, LE, [1.0])


def test_clean_planning_clamps_small_negatives():
    cleaned = clean_planning(np.array([-1e-8, 1.0]), np.zeros(2), 1e-6)
    np.testing.assert_array_equal(cleaned, [0.0, 1.0])
    with pytest.raises(BackendError):
        clean_planning(np.array([-1e-3]), np.zeros(1), 1e-6)


def test_get_backend():
    assert isinstance(get_backend("highs"), HighsBackend)
    assert isinstance(get_backend(" Reference "), ReferenceBackend)
    with pytest.raises(ValueError):
        get_backend("cplex")


def test_scaled_rows_normalizes_each_row():
    builder = LinearProgramBuilder("scaled")
    cols = builder.add_columns([1.0, 1.0], 0.0, np.inf)
    builder.add_rows(np.array([[2e6, -4e6], [0.5, 0.25], [0.0, 0.0]]), cols, [LE, GE, EQ], [8e6, 1.0, 0.0])
    lp = builder.build()
    scaled, factors = lp.scaled_rows()
    np.testing.assert_allclose(factors, [0.25e-6, 2.0, 1.0])
    np.testing.assert_allclose(abs(scaled.matrix).max(axis=1).toarray().ravel(), [1.0, 1.0, 0.0])
    np.testing.assert_allclose(scaled.rhs, [2.0, 2.0, 0.0])
    np.testing.assert_array_equal(scaled.senses, lp.senses)


def test_duals_of_badly_scaled_rows_map_back(backend):
    # first row of the two-row program multiplied by 1e6
    builder = LinearProgramBuilder("badly-scaled")
    cols = builder.add_columns([-1.0, -1.0], 0.0, np.inf)
    builder.add_rows(np.array([[1e6, 2e6], [3.0, 1.0]]), cols, LE, [4e6, 6.0])
    result = backend.solve_lp(builder.build(), need_duals=True)
    assert result.status == OPTIMAL
    np.testing.assert_allclose(result.primal, [1.6, 1.2], atol=1e-7)
    np.testing.assert_allclose(result.duals, [-0.4e-6, -0.2], rtol=1e-6, atol=1e-12)


def test_highs_retries_unknown_status(monkeypatch):
    methods = []

    def flaky(*args, **kwargs):
        methods.append(kwargs["method"])
        if len(methods) == 1:
            return OptimizeResult(status=4, message="numerical difficulties", x=None)
        return linprog(*args, **kwargs)

    monkeypatch.setattr(highs_module, "linprog", flaky)
    result = HighsBackend().solve_lp(_two_row_lp(), need_duals=True)
    assert methods == ["highs-ds", "highs-ipm"]
    assert result.status == OPTIMAL
    np.testing.assert_allclose(result.duals, [-0.4, -0.2], atol=1e-7)


def test_highs_raises_when_retry_fails(monkeypatch):
    def failing(*args, **kwargs):
        return OptimizeResult(status=4, message="numerical difficulties", x=None)

    monkeypatch.setattr(highs_module, "linprog", failing)
    with pytest.raises(BackendError):
        HighsBackend().solve_lp(_two_row_lp(), need_duals=True)


def test_limit_result_keeps_incumbent_objective():
    class Stopped(LPBackend):
        name = "stopped"

        def _solve_lp(self, lp, need_duals):
            return SolveResult(status=LIMIT, primal=np.array([1.0, 1.0]))

        def _solve_milp(self, lp):
            return SolveResult(status=LIMIT)

    result = Stopped().solve_lp(_two_row_lp())
    assert result.status == LIMIT
    assert result.objective == pytest.approx(-2.0)


def test_knapsack_matches_enumeration(backend):
    values = np.array([8.0, 11.0, 6.0, 4.0, 7.0])
    weights = np.array([5.0, 7.0, 4.0, 3.0, 6.0])
    capacity = 14.0
    builder = LinearProgramBuilder("knapsack-5")
    cols = builder.add_columns(-values, 0.0, 1.0, integer=True)
    builder.add_rows(weights[None, :], cols, LE, [capacity])
    result = backend.solve_milp(builder.build())

    best = max(
        values @ np.array(choice)
        for choice in itertools.product([0, 1], repeat=5)
        if weights @ np.array(choice) <= capacity
    )
    assert result.status == OPTIMAL
    assert -result.objective == pytest.approx(best)
    assert weights @ result.primal <= capacity + 1e-9


def test_backends_agree_on_square_random_lp():
    rng = np.random.default_rng(17)
    builder = LinearProgramBuilder("random-10")
    cols = builder.add_columns(rng.uniform(-1.0, 1.0, 10), 0.0, 5.0)
    builder.add_rows(rng.uniform(-0.5, 1.0, (10, 10)), cols, LE, rng.uniform(1.0, 5.0, 10))
    lp = builder.build()
    highs = HighsBackend().solve_lp(lp)
    reference = ReferenceBackend().solve_lp(lp)
    assert highs.status == reference.status == OPTIMAL
    assert highs.objective == pytest.approx(reference.objective, abs=1e-7)


def test_repeated_solve_is_deterministic(backend):
    lp = _two_row_lp()
    first = backend.solve_lp(lp, need_duals=True)
    second = backend.solve_lp(lp, need_duals=True)
    np.testing.assert_array_equal(first.primal, second.primal)
    np.testing.assert_array_equal(first.duals, second.duals)
    assert first.objective == second.objective
