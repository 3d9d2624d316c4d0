"""
Monolithic oracle tests on the toy instance, where every optimum is
known in closed form.
"""

import numpy as np
import pytest

from core.solvers import ReferenceBackend
from modules.instances.schemas import InstanceSpec
from modules.instances.service_layer import generate_instance
from modules.monolith.service_layer import build_least_cost, build_mga_monolith, solve_monolith


def test_least_cost_toy(toy, backend):
    record = solve_monolith(build_least_cost(toy), backend)
    assert record.converged
    assert record.planning == pytest.approx([1.0], abs=1e-7)
    assert record.total_cost == pytest.approx(3.0)
    assert record.period_costs == pytest.approx([2.0])
    assert record.iterations == 1
    assert len(record.trace) == 1


def test_least_cost_integer_toy(toy_integer):
    build = build_least_cost(toy_integer)
    assert build.lp.has_integers
    record = solve_monolith(build)
    assert record.total_cost == pytest.approx(3.0)
    assert record.trace[0].phase == "int"


def test_mga_maximize_capacity(toy, backend):
    record = solve_monolith(build_mga_monolith(toy, [-1.0], 3.3), backend)
    assert record.converged
    assert record.planning[0] == pytest.approx(1.3, abs=1e-7)
    assert record.mga_objective == pytest.approx(-1.3, abs=1e-7)
    assert record.total_cost <= 3.3 + 1e-7


def test_mga_minimize_capacity_uses_shedding(toy):
    record = solve_monolith(build_mga_monolith(toy, [1.0], 3.3))
    assert record.planning[0] == pytest.approx((1e4 - 3.3) / 9997.0, abs=1e-7)
    assert record.total_cost == pytest.approx(3.3, abs=1e-6)


def test_budget_below_least_cost_is_infeasible(toy):
    record = solve_monolith(build_mga_monolith(toy, [1.0], 2.0))
    assert record.status == "infeasible"
    assert record.planning == []


def test_mga_build_layout(two_zone):
    w = np.zeros(two_zone.num_planning)
    w[0] = 1.0
    build = build_mga_monolith(two_zone, w, 1e9)
    assert build.kind == "mga"
    assert build.budget_row == build.lp.num_rows - 1
    np.testing.assert_array_equal(build.lp.objective[build.planning_columns], w)
    assert build.column_map[("planning", 0)] == int(build.planning_columns[0])
    assert build.column_map[(3, 0)] == int(build.op_columns[2][0])
    assert build_least_cost(two_zone).kind == "least-cost"


def test_backends_agree_on_generated_instance():
    instance = generate_instance(InstanceSpec(zones=1, periods=2, hours_per_period=2, seed=2))
    highs = solve_monolith(build_least_cost(instance))
    reference = solve_monolith(build_least_cost(instance), ReferenceBackend())
    assert highs.total_cost == pytest.approx(reference.total_cost, rel=1e-7)


def test_positive_scaling_of_weights(two_zone):
    budget = 1.1 * solve_monolith(build_least_cost(two_zone)).total_cost
    w = np.linspace(-1.0, 1.0, two_zone.num_planning)
    single = solve_monolith(build_mga_monolith(two_zone, w, budget))
    double = solve_monolith(build_mga_monolith(two_zone, 2.0 * w, budget))
    assert double.mga_objective == pytest.approx(2.0 * single.mga_objective, rel=1e-7, abs=1e-7)
    assert 2.0 * float(w @ np.array(single.planning)) == pytest.approx(double.mga_objective, rel=1e-7, abs=1e-7)


def test_larger_budget_never_worsens_objective(two_zone):
    base = solve_monolith(build_least_cost(two_zone)).total_cost
    w = np.ones(two_zone.num_planning)
    tight = solve_monolith(build_mga_monolith(two_zone, w, 1.1 * base))
    loose = solve_monolith(build_mga_monolith(two_zone, w, 1.2 * base))
    assert loose.mga_objective <= tight.mga_objective + 1e-9
