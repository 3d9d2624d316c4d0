"""
CGA Planner - Monolith

The full least-cost and MGA problems as single LPs/MILPs. Used as the
correctness oracle for the decomposed solvers and as the baseline path
of the driver.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from core.config import settings
from core.exceptions import BackendError
from core.metrics import MASTER_LATENCY, MASTER_SOLVES
from core.solvers import (
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    LinearProgram,
    LinearProgramBuilder,
    LPBackend,
    clean_planning,
    get_backend,
)
from modules.mga_weights.schemas import MgaWeightVector
from modules.mga_weights.service_layer import weight_array
from modules.model.schemas import Instance, SolutionRecord, TraceEntry
from modules.model.service_layer import CompiledInstance, compile_valid, period_cost

logger = logging.getLogger(__name__)

ColumnKey = Tuple[Union[str, int], int]


@dataclass
class MonolithBuild:
    """
    Monolithic LP plus the map from model quantities to LP columns.

    ``op_columns[i]`` holds the operational columns of the i-th period
    followed by its slack columns.
    """

    lp: LinearProgram
    compiled: CompiledInstance
    planning_columns: np.ndarray
    op_columns: List[np.ndarray]
    budget_row: Optional[int] = None
    weights: Optional[np.ndarray] = None
    epsilon: Optional[float] = None

    @property
    def kind(self) -> str:
        return "least-cost" if self.budget_row is None else "mga"

    @property
    def column_map(self) -> Dict[ColumnKey, int]:
        """("planning", j) and (period id, op index) keys to LP column."""
        mapping: Dict[ColumnKey, int] = {("planning", j): int(c) for j, c in enumerate(self.planning_columns)}
        for block, columns in zip(self.compiled.blocks, self.op_columns):
            for i, c in enumerate(columns):
                mapping[(block.period, i)] = int(c)
        return mapping


def _assemble(compiled: CompiledInstance, name: str) -> Tuple[LinearProgramBuilder, np.ndarray, List[np.ndarray]]:
    builder = LinearProgramBuilder(name)
    x_cols = builder.add_columns(
        compiled.planning_cost, compiled.planning_lower, compiled.planning_upper, compiled.planning_integer
    )
    if compiled.planning_rhs.size:
        builder.add_rows(compiled.planning_matrix, x_cols, compiled.planning_senses, compiled.planning_rhs)

    op_columns = []
    for block in compiled.blocks:
        y_cols = builder.add_columns(block.op_cost, block.op_lower, block.op_upper)
        s_cols = builder.add_columns(np.full(block.num_slacks, block.slack_penalty), 0.0, np.inf)
        if block.rhs.size:
            builder.add_rows(
                sparse.hstack([block.coupling, block.op_matrix]), np.concatenate([x_cols, y_cols]), LE, block.rhs
            )
        if block.constraint_rhs.size:
            builder.add_rows(block.operational_rows(), np.concatenate([y_cols, s_cols]), block.senses, block.constraint_rhs)
        op_columns.append(np.concatenate([y_cols, s_cols]))
    return builder, x_cols, op_columns


def build_least_cost(instance: Union[Instance, CompiledInstance]) -> MonolithBuild:
    """
    Monolithic least-cost problem: min c'x + sum_p d_p'y_p over all rows.

    Raises:
        InvalidInstanceError: instance fails validation
    """
    compiled = compile_valid(instance)
    builder, x_cols, op_columns = _assemble(compiled, f"{compiled.instance.name}:monolith-least-cost")
    return MonolithBuild(lp=builder.build(), compiled=compiled, planning_columns=x_cols, op_columns=op_columns)


def build_mga_monolith(
    instance: Union[Instance, CompiledInstance],
    w: Union[MgaWeightVector, Sequence[float], np.ndarray],
    epsilon: float,
) -> MonolithBuild:
    """
    Monolithic MGA problem: min w'x subject to every least-cost row plus
    the budget row c'x + sum_p d_p'y_p <= epsilon.

    Args:
        instance: problem instance
        w: objective weights over the planning columns
        epsilon: total cost budget, passed in explicitly

    Returns:
        MonolithBuild with ``budget_row`` set
    """
    compiled = compile_valid(instance)
    weights = weight_array(w, compiled.num_planning)
    builder, x_cols, op_columns = _assemble(compiled, f"{compiled.instance.name}:monolith-mga")
    lp = builder.build()

    budget = lp.objective.copy()
    objective = np.zeros(lp.num_cols)
    objective[x_cols] = weights

    budget_builder = LinearProgramBuilder(lp.name)
    budget_builder.add_columns(objective, lp.lower, lp.upper, lp.integrality)
    all_cols = np.arange(lp.num_cols)
    if lp.num_rows:
        budget_builder.add_rows(lp.matrix, all_cols, lp.senses, lp.rhs)
    budget_row = budget_builder.add_rows(budget[None, :], all_cols, LE, [epsilon])

    return MonolithBuild(
        lp=budget_builder.build(),
        compiled=compiled,
        planning_columns=x_cols,
        op_columns=op_columns,
        budget_row=int(budget_row[0]),
        weights=weights,
        epsilon=float(epsilon),
    )


def solve_monolith(build: MonolithBuild, backend: Optional[LPBackend] = None) -> SolutionRecord:
    """
    Solve a monolithic build and decompose the answer per period.

    Period costs are recomputed from the primal values so the record is
    defined exactly as the decomposed solvers define theirs.
    """
    backend = backend or get_backend()
    compiled = build.compiled
    started = time.perf_counter()
    result = backend.solve(build.lp)
    elapsed = time.perf_counter() - started
    MASTER_SOLVES.labels(kind="monolith").inc()
    MASTER_LATENCY.labels(kind="monolith").observe(elapsed)

    phase = "int" if build.lp.has_integers else "lp"
    if result.status == INFEASIBLE:
        logger.warning(f"{build.lp.name}: infeasible (epsilon={build.epsilon})")
        return SolutionRecord(
            planning=[],
            period_costs=[],
            status="infeasible",
            iterations=1,
            trace=[TraceEntry(iteration=1, phase=phase, master_time=elapsed)],
            message=f"monolith infeasible: {result.message}",
        )
    if result.status not in (OPTIMAL, LIMIT) or result.primal is None:
        raise BackendError(f"{build.lp.name}: monolith solve ended with status {result.status}: {result.message}")

    primal = result.primal
    planning = clean_planning(primal[build.planning_columns], compiled.planning_lower, settings.PRIMAL_CLAMP_TOL)
    period_costs = [period_cost(block, primal[cols]) for block, cols in zip(compiled.blocks, build.op_columns)]
    total = float(compiled.planning_cost @ planning) + float(sum(period_costs))
    mga_objective = float(build.weights @ planning) if build.weights is not None else None

    status = "converged" if result.status == OPTIMAL else "iteration-limit"
    objective = result.objective if np.isfinite(result.objective) else None
    logger.info(f"{build.lp.name}: {status}, total cost {total:.6g}")
    return SolutionRecord(
        planning=planning.tolist(),
        period_costs=period_costs,
        total_cost=total,
        mga_objective=mga_objective,
        status=status,
        iterations=1,
        trace=[
            TraceEntry(
                iteration=1,
                phase=phase,
                lower_bound=objective,
                upper_bound=objective,
                gap=0.0,
                true_cost=total,
                budget_ratio=(total / build.epsilon) if build.epsilon else None,
                master_objective=objective,
                master_time=elapsed,
            )
        ],
        message=result.message,
    )
