"""
Benders tests: cut-generating subproblems, bound helpers, the
least-cost master and the full multi-cut loop against the monolith.
"""

import numpy as np
import pytest

from core.solvers import LIMIT, HighsBackend
from modules.benders import service_layer as benders_module
from modules.benders.service_layer import (
    SubproblemRunner,
    benders_least_cost,
    build_master_least_cost,
    compute_upper_bound,
    relative_gap,
    solve_subproblem,
)
from modules.cutpool.service_layer import CutPool, evaluate_cut
from modules.driver.schemas import AlgoConfig
from modules.monolith.service_layer import build_least_cost, solve_monolith


def test_toy_subproblem_value_and_subgradient(toy, backend):
    cut, op_values = solve_subproblem(toy, 1, [0.5], backend)
    assert cut.value == pytest.approx(2.0 * 0.5 + 1e4 * 0.5)
    assert cut.subgradient == pytest.approx([2.0 - 1e4])
    assert op_values == pytest.approx([0.5, 0.5])

    cut, _ = solve_subproblem(toy, 1, [1.5], backend)
    assert cut.value == pytest.approx(2.0)
    assert cut.subgradient == pytest.approx([0.0], abs=1e-9)
    assert cut.provenance == "least-cost"


def test_unknown_period(toy):
    with pytest.raises(ValueError):
        solve_subproblem(toy, 2, [1.0])


def test_cuts_underestimate_period_cost(two_zone):
    rng = np.random.default_rng(0)
    upper = np.array(two_zone.planning_upper, dtype=float)
    runner = SubproblemRunner(two_zone)
    points = [rng.uniform(0.0, 1.0, upper.size) * upper for _ in range(4)]
    cuts = [r.to_cut() for x in points for r in runner.evaluate(x)]
    for x in points:
        for result in runner.evaluate(x):
            for cut in cuts:
                if cut.period == result.period:
                    assert evaluate_cut(cut, x) <= result.value + 1e-6 * max(1.0, abs(result.value))


def test_runner_is_ordered_and_worker_independent(two_zone):
    x = np.array(two_zone.planning_upper, dtype=float) * 0.3
    with SubproblemRunner(two_zone, workers=1) as serial, SubproblemRunner(two_zone, workers=3) as pooled:
        a = serial.evaluate(x)
        b = pooled.evaluate(x)
    assert [r.period for r in b] == [1, 2, 3]
    assert [r.value for r in a] == [r.value for r in b]


def test_bound_helpers():
    assert compute_upper_bound([5.0, 3.0, 4.0]) == 3.0
    assert compute_upper_bound([5.0, 3.0], planning_terms=[1.0, 4.0]) == 6.0
    with pytest.raises(ValueError):
        compute_upper_bound([])
    assert relative_gap(10.0, 8.0) == pytest.approx(0.25)
    assert relative_gap(1.0, 0.0) == pytest.approx(1e9)


def test_master_without_cuts(toy):
    pool = CutPool(1, 1)
    lp = build_master_least_cost(toy, pool)
    assert lp.num_cols == 2
    assert lp.num_rows == 0
    np.testing.assert_array_equal(lp.objective, [1.0, 1.0])

    cut, _ = solve_subproblem(toy, 1, [0.5])
    pool.insert([cut])
    lp = build_master_least_cost(toy, pool)
    assert lp.num_rows == 1
    assert lp.senses[0] == "G"


def test_least_cost_toy(toy, config):
    pool = CutPool(1, 1)
    record = benders_least_cost(toy, config, pool)
    assert record.converged
    assert record.total_cost == pytest.approx(3.0, rel=1e-6)
    assert record.planning == pytest.approx([1.0], abs=1e-6)
    assert record.iterations == len(record.trace)
    assert pool.lc_iterations == record.iterations
    assert len(pool) == record.iterations
    assert all(entry.lower_bound <= entry.upper_bound + 1e-9 for entry in record.trace)


def test_least_cost_matches_monolith(two_zone, config):
    record = benders_least_cost(two_zone, config, CutPool(two_zone.num_planning, 3))
    oracle = solve_monolith(build_least_cost(two_zone))
    assert record.converged
    assert record.total_cost == pytest.approx(oracle.total_cost, rel=1e-4)
    assert record.total_cost >= oracle.total_cost - 1e-6 * oracle.total_cost


def test_integer_phase_switch(two_zone_integer, config):
    record = benders_least_cost(two_zone_integer, config, CutPool(two_zone_integer.num_planning, 2))
    oracle = solve_monolith(build_least_cost(two_zone_integer))
    assert record.converged
    assert record.trace[-1].phase == "int"
    assert record.total_cost == pytest.approx(oracle.total_cost, rel=1e-4)
    generators = [j for j, integer in enumerate(two_zone_integer.planning_integer) if integer]
    values = np.array(record.planning)[generators]
    np.testing.assert_allclose(values, np.round(values), atol=1e-9)


def test_iteration_limit(two_zone):
    config = AlgoConfig(delta_ls=0.0, k_ls=2)
    record = benders_least_cost(two_zone, config, CutPool(two_zone.num_planning, 3))
    assert record.status == "iteration-limit"
    assert record.iterations == 2
    assert record.total_cost is not None


def test_custom_iterate_selector(toy, config):
    seen = []

    def recording(x, state):
        seen.append(state.k)
        return x

    record = benders_least_cost(toy, config, CutPool(1, 1), iterate_selector=recording)
    assert record.total_cost == pytest.approx(3.0, rel=1e-6)
    assert seen == list(range(1, len(seen) + 1))


def test_limit_master_keeps_lower_bound(monkeypatch, two_zone, config):
    solves = []

    class StoppingBackend(HighsBackend):
        def solve(self, lp, need_duals=False):
            result = super().solve(lp, need_duals=need_duals)
            if "master-least-cost" in lp.name:
                solves.append(lp.name)
                if len(solves) == 3:
                    # incumbent far above the true optimum; must not become LB
                    result.status = LIMIT
                    result.objective = 1e12
            return result

    monkeypatch.setattr(benders_module, "get_backend", lambda name=None: StoppingBackend())
    record = benders_least_cost(two_zone, config, CutPool(two_zone.num_planning, 3))
    oracle = solve_monolith(build_least_cost(two_zone))
    assert record.trace[1].lower_bound == record.trace[0].lower_bound
    assert record.converged
    assert record.total_cost == pytest.approx(oracle.total_cost, rel=1e-4)


@pytest.mark.parametrize("index", [6, 9, 11, 15])
def test_least_cost_on_high_penalty_instances(family_member, index):
    instance = family_member(index)
    config = AlgoConfig(delta_ls=1e-3)
    record = benders_least_cost(instance, config, CutPool(instance.num_planning, len(instance.periods)))
    oracle = solve_monolith(build_least_cost(instance)).total_cost
    assert record.converged
    assert abs(record.total_cost - oracle) <= 1e-3 * abs(oracle) + 1e-9
    assert all(entry.lower_bound <= oracle * (1.0 + 1e-6) + 1e-6 for entry in record.trace)
