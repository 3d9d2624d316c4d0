"""
CGA Planner - CGA Service Layer

Cutting-plane iterations for one MGA objective: the master minimizes
w'x under the budget row c'x + sum_p theta_p <= epsilon with theta_p
bounded below by the pooled cuts; iterates stop once their true cost,
from fresh subproblem solves, is within epsilon * (1 + delta_mga).
"""

from __future__ import annotations

import logging
import time
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from core.solvers import INFEASIBLE, LE, LinearProgram, LinearProgramBuilder, get_backend
from modules.benders.service_layer import (
    MasterLayout,
    SubproblemRunner,
    add_cut_rows,
    add_planning_columns,
    master_planning,
    solve_master,
)
from modules.cga.schemas import Budget
from modules.cutpool.service_layer import LEAST_COST, CutPool
from modules.driver.schemas import AlgoConfig
from modules.mga_weights.schemas import MgaWeightVector
from modules.mga_weights.service_layer import weight_array
from modules.model.schemas import Instance, SolutionRecord, TraceEntry
from modules.model.service_layer import CompiledInstance, compile_instance, compile_valid

logger = logging.getLogger(__name__)

Weights = Union[MgaWeightVector, Sequence[float], np.ndarray]


def compute_budget(base_cost: float, beta: float) -> Budget:
    """
    Budget epsilon = (1 + beta) * base_cost.

    Raises:
        ValueError: negative base cost or beta
    """
    if base_cost < 0:
        raise ValueError(f"base cost must be >= 0, got {base_cost}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta > 1:
        logger.warning(f"beta={beta} allows more than doubling the least-cost budget")
    return Budget(epsilon=(1.0 + beta) * base_cost, beta=beta, base_cost=base_cost)


def check_budget_termination(true_cost: float, budget: Budget, delta_mga: float) -> bool:
    """True iff true_cost <= epsilon * (1 + delta_mga)."""
    return true_cost <= budget.limit(delta_mga)


def _mga_master(
    compiled: CompiledInstance,
    weights: np.ndarray,
    budget: Budget,
    pool: CutPool,
    iterate_id: Optional[int],
    integer: bool,
) -> Tuple[LinearProgram, MasterLayout]:
    builder = LinearProgramBuilder(f"{compiled.instance.name}:master-mga")
    x_cols, theta_cols = add_planning_columns(builder, compiled, weights, 0.0, integer)
    budget_row = builder.add_rows(
        np.concatenate([compiled.planning_cost, np.ones(compiled.num_periods)])[None, :],
        np.concatenate([x_cols, theta_cols]),
        LE,
        [budget.epsilon],
    )
    phase = LEAST_COST if iterate_id is None else iterate_id
    cut_rows = add_cut_rows(builder, compiled, pool, pool.view_indices(phase), x_cols, theta_cols)
    layout = MasterLayout(planning=x_cols, theta=theta_cols, cut_rows=cut_rows, budget_row=int(budget_row[0]))
    return builder.build(), layout


def build_mga_master(
    instance: Union[Instance, CompiledInstance],
    w: Weights,
    budget: Budget,
    pool: CutPool,
    iterate_id: Optional[int] = None,
    integer: bool = False,
) -> LinearProgram:
    """
    Approximated MGA master over (x, theta).

    Args:
        instance: problem instance
        w: objective weights over the planning columns
        budget: total cost budget
        pool: cut pool
        iterate_id: MGA iterate whose view to use; the least-cost view when absent
        integer: apply planning integrality

    Returns:
        LinearProgram with columns x then theta (period order)
    """
    compiled = compile_instance(instance)
    lp, _ = _mga_master(compiled, weight_array(w, compiled.num_planning), budget, pool, iterate_id, integer)
    return lp


class _Evaluated(NamedTuple):
    true_cost: float
    objective: float
    iteration: int
    planning: np.ndarray
    period_costs: List[float]


def _best_iterate(candidates: Sequence[_Evaluated]) -> _Evaluated:
    """
    Best-so-far iterate of a phase that never met the budget: the one
    closest to it (lowest true cost), then lowest w'x, then earliest.
    """
    return min(candidates, key=lambda e: (e.true_cost, e.objective, e.iteration))


def _infeasible_record(trace: List[TraceEntry], iterations: int, message: str) -> SolutionRecord:
    return SolutionRecord(
        planning=[], period_costs=[], status="infeasible", trace=trace, iterations=iterations, message=message
    )


def cga_solve_one(
    instance: Union[Instance, CompiledInstance],
    w: Weights,
    budget: Budget,
    config: AlgoConfig,
    pool: CutPool,
    iterate_id: int = 0,
    runner: Optional[SubproblemRunner] = None,
) -> SolutionRecord:
    """
    Solve one MGA objective by cutting planes.

    Every iteration evaluates the true cost of x^k and adds one cut per
    period, tagged with ``iterate_id``. A budget pass either switches to
    the integer master (instances with integer planning columns, once)
    or terminates with x^k.

    Returns:
        SolutionRecord; status infeasible when the master has no point
        under the budget. At the iteration limit the record holds the
        final phase's iterate with the lowest true cost.
    """
    compiled = compile_valid(instance)
    weights = weight_array(w, compiled.num_planning)
    backend = get_backend(config.backend)
    own_runner = runner is None
    runner = runner or SubproblemRunner(compiled, workers=config.workers, backend=config.backend)
    c = compiled.planning_cost
    label = f"mga-{iterate_id}"

    try:
        integer = False
        lp, layout = _mga_master(compiled, weights, budget, pool, iterate_id, integer)
        result, master_time = solve_master(lp, backend, "mga")
        if result.status == INFEASIBLE:
            logger.error(f"{label}: initial master infeasible at epsilon={budget.epsilon:.6g}")
            return _infeasible_record([], 0, "master infeasible at the given budget")
        x = master_planning(result, layout, compiled)
        master_objective = float(result.objective)

        trace: List[TraceEntry] = []
        status = "iteration-limit"
        candidates: List[_Evaluated] = []
        phase_start = 0
        k = 0
        for k in range(1, config.k_mga + 1):
            started = time.perf_counter()
            results = runner.evaluate(x)
            sub_time = time.perf_counter() - started
            period_costs = [r.value for r in results]
            total = float(c @ x) + float(sum(period_costs))
            candidates.append(_Evaluated(total, float(weights @ x), k, x, period_costs))
            passed = check_budget_termination(total, budget, config.delta_mga)
            pool.insert([r.to_cut(provenance="mga", iterate_id=iterate_id, iteration=k) for r in results])

            trace.append(
                TraceEntry(
                    iteration=k,
                    phase="int" if integer else "lp",
                    true_cost=total,
                    budget_ratio=total / budget.epsilon if budget.epsilon else None,
                    master_objective=master_objective,
                    master_time=master_time,
                    subproblem_time=sub_time,
                )
            )
            logger.debug(f"{label} iter {k}: cost={total:.6g} ratio={total / max(budget.epsilon, 1e-12):.6f}")

            if passed and not (compiled.has_integers and not integer):
                status = "converged"
                break
            if passed:
                logger.info(f"{label} iter {k}: budget satisfied in LP phase; switching to integer master")
                integer = True
                phase_start = len(candidates)

            lp, layout = _mga_master(compiled, weights, budget, pool, iterate_id, integer)
            result, master_time = solve_master(lp, backend, "mga")
            if result.status == INFEASIBLE:
                phase = "integer" if integer else "LP"
                logger.error(f"{label} iter {k}: {phase} master infeasible at epsilon={budget.epsilon:.6g}")
                return _infeasible_record(trace, k, f"{phase} master infeasible at the given budget")
            x = master_planning(result, layout, compiled)
            master_objective = float(result.objective)

        pool.record_iterations(iterate_id, k)
        message = ""
        if status == "converged":
            chosen = candidates[-1]
            logger.info(f"{label}: converged in {k} iterations, w'x={chosen.objective:.6g}, cost={chosen.true_cost:.6g}")
        else:
            # a switch on the last iteration leaves only the LP iterate that triggered it
            chosen = _best_iterate(candidates[phase_start:] or candidates[-1:])
            message = f"budget not met; closest iterate {chosen.iteration} returned"
            logger.warning(f"{label}: iteration limit {config.k_mga} reached; {message}")
        return SolutionRecord(
            planning=chosen.planning.tolist(),
            period_costs=chosen.period_costs,
            total_cost=chosen.true_cost,
            mga_objective=chosen.objective,
            trace=trace,
            status=status,
            iterations=k,
            message=message,
        )
    finally:
        if own_runner:
            runner.close()
