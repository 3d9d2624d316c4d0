"""
CGA Planner - Benders Service Layer

Multi-cut Benders decomposition for the least-cost problem: one
cut-generating subproblem per period, one epigraph column theta_p per
period in the master, Kelley iterates and a two-phase integer scheme.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from core.config import settings
from core.exceptions import BackendError
from core.metrics import MASTER_LATENCY, MASTER_SOLVES, SUBPROBLEM_LATENCY, SUBPROBLEM_SOLVES
from core.solvers import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    LinearProgram,
    LinearProgramBuilder,
    LPBackend,
    SolveResult,
    clean_planning,
    get_backend,
)
from modules.benders.schemas import Cut
from modules.cutpool.service_layer import LEAST_COST, CutPool, Phase
from modules.driver.schemas import AlgoConfig
from modules.model.schemas import Instance, SolutionRecord, TraceEntry
from modules.model.service_layer import CompiledBlock, CompiledInstance, compile_instance, compile_valid

logger = logging.getLogger(__name__)


# Subproblems


@dataclass
class SubproblemResult:
    """Optimal period cost at a fixed planning point, its subgradient and dispatch"""

    period: int
    point: np.ndarray
    value: float
    subgradient: np.ndarray
    op_values: np.ndarray
    solve_time: float = 0.0

    def to_cut(self, provenance: str = "least-cost", iterate_id: Optional[int] = None, iteration: int = 0) -> Cut:
        return Cut(
            period=self.period,
            point=self.point.tolist(),
            value=self.value,
            subgradient=self.subgradient.tolist(),
            provenance=provenance,
            iterate_id=iterate_id,
            birth_iteration=iteration,
        )


def _subproblem_template(block: CompiledBlock, n: int) -> LinearProgram:
    """
    Columns (x copy, y, slack); rows: x copy = x^k, coupling rows and
    operational rows. Only the first n right-hand sides change per solve.
    """
    builder = LinearProgramBuilder(f"subproblem[{block.period}]")
    x_cols = builder.add_columns(np.zeros(n), -np.inf, np.inf)
    y_cols = builder.add_columns(block.op_cost, block.op_lower, block.op_upper)
    s_cols = builder.add_columns(np.full(block.num_slacks, block.slack_penalty), 0.0, np.inf)
    builder.add_rows(sparse.identity(n, format="csr"), x_cols, EQ, np.zeros(n))
    if block.rhs.size:
        builder.add_rows(sparse.hstack([block.coupling, block.op_matrix]), np.concatenate([x_cols, y_cols]), LE, block.rhs)
    if block.constraint_rhs.size:
        builder.add_rows(block.operational_rows(), np.concatenate([y_cols, s_cols]), block.senses, block.constraint_rhs)
    return builder.build()


def _solve_template(template: LinearProgram, block: CompiledBlock, x: np.ndarray, backend: LPBackend) -> SubproblemResult:
    n = x.shape[0]
    rhs = template.rhs.copy()
    rhs[:n] = x
    started = time.perf_counter()
    result = backend.solve_lp(replace(template, rhs=rhs), need_duals=True)
    elapsed = time.perf_counter() - started
    SUBPROBLEM_SOLVES.inc()
    SUBPROBLEM_LATENCY.observe(elapsed)
    if not result.is_optimal or result.duals is None:
        raise BackendError(
            f"Subproblem for period {block.period} ended with status {result.status}: {result.message}",
            status=result.status,
        )
    return SubproblemResult(
        period=block.period,
        point=x.copy(),
        value=float(result.objective),
        subgradient=np.asarray(result.duals[:n], dtype=float),
        op_values=np.asarray(result.primal[n:], dtype=float),
        solve_time=elapsed,
    )


def solve_subproblem(
    instance: Union[Instance, CompiledInstance],
    period: int,
    x: Sequence[float],
    backend: Optional[LPBackend] = None,
) -> Tuple[Cut, np.ndarray]:
    """
    Cut-generating subproblem for one period.

    Args:
        instance: problem instance
        period: period id
        x: planning point to fix

    Returns:
        (least-cost Cut at x, operational values followed by slacks)
    """
    compiled = compile_instance(instance)
    blocks = {block.period: block for block in compiled.blocks}
    if period not in blocks:
        raise ValueError(f"Unknown period {period}")
    block = blocks[period]
    point = np.asarray(x, dtype=float)
    template = _subproblem_template(block, compiled.num_planning)
    result = _solve_template(template, block, point, backend or get_backend())
    return result.to_cut(), result.op_values


class SubproblemRunner:
    """
    Solves every period's subproblem at a planning point.

    With ``workers > 1`` periods are solved on a thread pool, one
    backend per worker thread. Results always come back in period order.
    """

    def __init__(self, instance: Union[Instance, CompiledInstance], workers: int = 1, backend: Optional[str] = None):
        self.compiled = compile_instance(instance)
        self.workers = max(1, int(workers))
        self.backend_name = backend
        self.templates = [_subproblem_template(block, self.compiled.num_planning) for block in self.compiled.blocks]
        self._local = threading.local()
        self._executor: Optional[ThreadPoolExecutor] = None

    def _backend(self) -> LPBackend:
        backend = getattr(self._local, "backend", None)
        if backend is None:
            backend = get_backend(self.backend_name)
            self._local.backend = backend
        return backend

    def _solve_one(self, index: int, x: np.ndarray) -> SubproblemResult:
        return _solve_template(self.templates[index], self.compiled.blocks[index], x, self._backend())

    def evaluate(self, x: Sequence[float]) -> List[SubproblemResult]:
        point = np.asarray(x, dtype=float)
        indices = range(len(self.templates))
        if self.workers == 1:
            return [self._solve_one(i, point) for i in indices]
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="subproblem")
        # map preserves input order regardless of completion order
        return list(self._executor.map(lambda i: self._solve_one(i, point), indices))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "SubproblemRunner":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# Bounds


def compute_upper_bound(totals: Sequence[float], planning_terms: Optional[Sequence[float]] = None) -> float:
    """
    Best total cost seen so far.

    Args:
        totals: sum over periods of f_p(x^j), one entry per iterate
        planning_terms: c'x^j per iterate; omitted when already included

    Returns:
        min over j of c'x^j + sum_p f_p(x^j)
    """
    values = np.asarray(totals, dtype=float)
    if values.size == 0:
        raise ValueError("upper bound needs at least one evaluated iterate")
    if planning_terms is not None:
        values = values + np.asarray(planning_terms, dtype=float)
    return float(values.min())


def relative_gap(upper: float, lower: float) -> float:
    return (upper - lower) / max(abs(lower), 1e-9)


# Master problems


@dataclass
class MasterLayout:
    """Column positions in a master LP"""

    planning: np.ndarray
    theta: np.ndarray
    cut_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    budget_row: Optional[int] = None


def add_planning_columns(
    builder: LinearProgramBuilder,
    compiled: CompiledInstance,
    cost: np.ndarray,
    theta_cost: float,
    integer: bool,
) -> Tuple[np.ndarray, np.ndarray]:
    """x (with planning rows) and one theta_p >= 0 per period."""
    x_cols = builder.add_columns(
        cost, compiled.planning_lower, compiled.planning_upper, compiled.planning_integer if integer else None
    )
    if compiled.planning_rhs.size:
        builder.add_rows(compiled.planning_matrix, x_cols, compiled.planning_senses, compiled.planning_rhs)
    theta_cols = builder.add_columns(np.full(compiled.num_periods, theta_cost), 0.0, np.inf)
    return x_cols, theta_cols


def add_cut_rows(
    builder: LinearProgramBuilder,
    compiled: CompiledInstance,
    pool: CutPool,
    indices: np.ndarray,
    x_cols: np.ndarray,
    theta_cols: np.ndarray,
) -> np.ndarray:
    """Rows  -subgradient'x + theta_p >= value - subgradient'point  for the given pool cuts."""
    if indices.size == 0:
        return np.zeros(0, dtype=int)
    periods, subgradients, intercepts = pool.arrays()
    position = {block.period: i for i, block in enumerate(compiled.blocks)}
    theta_index = np.array([position[p] for p in periods[indices]], dtype=int)
    k = indices.size
    selector = sparse.csr_matrix((np.ones(k), (np.arange(k), theta_index)), shape=(k, compiled.num_periods))
    rows = sparse.hstack([sparse.csr_matrix(-subgradients[indices]), selector], format="csr")
    return builder.add_rows(rows, np.concatenate([x_cols, theta_cols]), GE, intercepts[indices])


def _least_cost_master(
    compiled: CompiledInstance, pool: CutPool, phase: Phase, integer: bool
) -> Tuple[LinearProgram, MasterLayout]:
    builder = LinearProgramBuilder(f"{compiled.instance.name}:master-least-cost")
    x_cols, theta_cols = add_planning_columns(builder, compiled, compiled.planning_cost, 1.0, integer)
    cut_rows = add_cut_rows(builder, compiled, pool, pool.view_indices(phase), x_cols, theta_cols)
    return builder.build(), MasterLayout(planning=x_cols, theta=theta_cols, cut_rows=cut_rows)


def build_master_least_cost(
    instance: Union[Instance, CompiledInstance],
    pool: CutPool,
    integer: bool = False,
) -> LinearProgram:
    """
    Least-cost master over (x, theta): min c'x + sum_p theta_p subject to
    the planning rows and one row per least-cost cut in ``pool``.
    Columns are ordered x first, then theta in period order.
    """
    lp, _ = _least_cost_master(compile_instance(instance), pool, LEAST_COST, integer)
    return lp


def solve_master(lp: LinearProgram, backend: LPBackend, kind: str) -> Tuple[SolveResult, float]:
    """Solve a master LP/MILP; returns the result and elapsed seconds."""
    started = time.perf_counter()
    result = backend.solve(lp)
    elapsed = time.perf_counter() - started
    MASTER_SOLVES.labels(kind=kind).inc()
    MASTER_LATENCY.labels(kind=kind).observe(elapsed)
    if result.status not in (OPTIMAL, INFEASIBLE, LIMIT):
        raise BackendError(f"{lp.name}: master ended with status {result.status}: {result.message}", status=result.status)
    if result.status == LIMIT and result.primal is None:
        raise BackendError(f"{lp.name}: master hit a limit without a usable point: {result.message}", status=LIMIT)
    return result, elapsed


# Least-cost Benders


@dataclass
class BendersState:
    """Mutable loop state of one least-cost solve"""

    iterate: np.ndarray
    pool: CutPool
    ub: float = math.inf
    lb: float = -math.inf
    k: int = 0
    integer: bool = False
    best_planning: Optional[np.ndarray] = None
    history: List[Tuple[np.ndarray, float, List[float]]] = field(default_factory=list)

    def record(self, x: np.ndarray, total: float, period_costs: List[float]) -> None:
        """Add an evaluated iterate; the earliest iterate attaining UB is kept."""
        self.history.append((x, total, period_costs))
        self.ub = compute_upper_bound([h[1] for h in self.history])
        best = int(np.argmin([h[1] for h in self.history]))
        self.best_planning = self.history[best][0]

    def best(self) -> Tuple[np.ndarray, float, List[float]]:
        best = int(np.argmin([h[1] for h in self.history]))
        return self.history[best]

    def reset_phase(self) -> None:
        self.integer = True
        self.history = []
        self.ub = math.inf
        self.lb = -math.inf
        self.best_planning = None


IterateSelector = Callable[[np.ndarray, BendersState], np.ndarray]


def kelley(master_planning: np.ndarray, state: BendersState) -> np.ndarray:
    """Next iterate is the master optimum."""
    return master_planning


def master_planning(result: SolveResult, layout: MasterLayout, compiled: CompiledInstance) -> np.ndarray:
    return clean_planning(result.primal[layout.planning], compiled.planning_lower, settings.PRIMAL_CLAMP_TOL)


def benders_least_cost(
    instance: Union[Instance, CompiledInstance],
    config: AlgoConfig,
    pool: CutPool,
    iterate_selector: IterateSelector = kelley,
    runner: Optional[SubproblemRunner] = None,
) -> SolutionRecord:
    """
    Multi-cut Benders decomposition for the least-cost problem.

    Each iteration solves all period subproblems at the current iterate,
    updates UB, adds one cut per period and re-solves the master for LB.
    When the relative gap closes on an instance with integer planning
    columns, integrality is switched on and UB is reset; otherwise the
    iterate attaining UB is returned.

    Args:
        instance: problem instance
        config: uses delta_ls, k_ls, workers and backend
        pool: cut pool receiving least-cost cuts
        iterate_selector: maps the master optimum to the next iterate
        runner: subproblem runner to reuse

    Returns:
        SolutionRecord with status converged, iteration-limit or infeasible
    """
    compiled = compile_valid(instance)
    backend = get_backend(config.backend)
    own_runner = runner is None
    runner = runner or SubproblemRunner(compiled, workers=config.workers, backend=config.backend)
    c = compiled.planning_cost

    try:
        lp, layout = _least_cost_master(compiled, pool, LEAST_COST, integer=False)
        result, _ = solve_master(lp, backend, "least-cost")
        if result.status == INFEASIBLE:
            logger.error(f"{compiled.instance.name}: least-cost master infeasible; planning rows admit no point")
            return SolutionRecord(planning=[], period_costs=[], status="infeasible", message="master infeasible")

        state = BendersState(iterate=master_planning(result, layout, compiled), pool=pool)
        trace: List[TraceEntry] = []
        status = "iteration-limit"

        for k in range(1, config.k_ls + 1):
            state.k = k
            started = time.perf_counter()
            results = runner.evaluate(state.iterate)
            sub_time = time.perf_counter() - started

            period_costs = [r.value for r in results]
            total = float(c @ state.iterate) + float(sum(period_costs))
            state.record(state.iterate, total, period_costs)
            pool.insert([r.to_cut(iteration=k) for r in results])

            lp, layout = _least_cost_master(compiled, pool, LEAST_COST, integer=state.integer)
            result, master_time = solve_master(lp, backend, "least-cost")
            if result.status == INFEASIBLE:
                raise BackendError(f"{lp.name}: master became infeasible after adding cuts")
            if result.is_optimal:
                state.lb = max(state.lb, float(result.objective))
            else:
                logger.warning(f"LS iter {k}: master stopped at status {result.status}; LB kept at {state.lb:.6g}")
            gap = relative_gap(state.ub, state.lb)
            phase = "int" if state.integer else "lp"
            trace.append(
                TraceEntry(
                    iteration=k,
                    phase=phase,
                    lower_bound=state.lb,
                    upper_bound=state.ub,
                    gap=gap,
                    true_cost=total,
                    master_objective=float(result.objective),
                    master_time=master_time,
                    subproblem_time=sub_time,
                )
            )
            logger.debug(f"LS iter {k} [{phase}]: LB={state.lb:.6g} UB={state.ub:.6g} gap={gap:.3e}")

            if gap <= config.delta_ls:
                if compiled.has_integers and not state.integer:
                    logger.info(f"LS iter {k}: LP phase converged (gap {gap:.3e}); switching to integer master")
                    state.reset_phase()
                    lp, layout = _least_cost_master(compiled, pool, LEAST_COST, integer=True)
                    result, _ = solve_master(lp, backend, "least-cost")
                    if result.status == INFEASIBLE:
                        logger.error(f"{compiled.instance.name}: integer least-cost master infeasible")
                        return SolutionRecord(
                            planning=[], period_costs=[], status="infeasible", trace=trace, iterations=k,
                            message="integer master infeasible",
                        )
                    if result.is_optimal:
                        state.lb = float(result.objective)
                    state.iterate = master_planning(result, layout, compiled)
                    continue
                status = "converged"
                break
            state.iterate = iterate_selector(master_planning(result, layout, compiled), state)

        if not state.history:
            # Limit reached right after a phase switch: evaluate the integer master point
            results = runner.evaluate(state.iterate)
            period_costs = [r.value for r in results]
            state.record(state.iterate, float(c @ state.iterate) + float(sum(period_costs)), period_costs)

        best_x, best_total, best_costs = state.best()
        pool.record_iterations(LEAST_COST, state.k)
        if status == "converged":
            logger.info(f"Least-cost converged in {state.k} iterations: cost {best_total:.6g}")
        else:
            logger.warning(f"Least-cost stopped at the iteration limit {config.k_ls}: UB={state.ub:.6g} LB={state.lb:.6g}")
        return SolutionRecord(
            planning=best_x.tolist(),
            period_costs=best_costs,
            total_cost=best_total,
            trace=trace,
            status=status,
            iterations=state.k,
        )
    finally:
        if own_runner:
            runner.close()
