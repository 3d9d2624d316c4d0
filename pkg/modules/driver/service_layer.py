"""
CGA Planner - Driver Service Layer

End-to-end runs: least-cost solve, budget, weight generation,
optional partitioning and one MGA solve per weight vector, either by
cutting planes with shared cuts or by the monolithic oracle.
"""

from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.config import settings
from core.documents import write_document
from core.exceptions import DimensionMismatchError, PlannerError
from core.metrics import write_metrics
from core.seeds import derive_seed
from core.solvers import get_backend
from modules.benders.service_layer import SubproblemRunner, benders_least_cost
from modules.cga.schemas import Budget
from modules.cga.service_layer import cga_solve_one, compute_budget
from modules.cutpool.service_layer import CutPool
from modules.driver.schemas import AlgoConfig, ComparisonReport, ComparisonRow, MgaRun, RunReport
from modules.instances.storage import dumps_instance
from modules.mga_weights.schemas import MgaWeightVector
from modules.mga_weights.service_layer import combination_set
from modules.model.schemas import Instance, SolutionRecord
from modules.model.service_layer import CompiledInstance, compile_valid
from modules.monolith.service_layer import build_least_cost, build_mga_monolith, solve_monolith
from modules.partition.schemas import WeightPartition
from modules.partition.service_layer import partition_weights, schedule, write_partition

logger = logging.getLogger(__name__)

# (vector index, weights, partition index or None)
WorkItem = Tuple[int, MgaWeightVector, Optional[int]]


def instance_hash(instance: Instance) -> str:
    return hashlib.sha256(dumps_instance(instance).encode("utf-8")).hexdigest()


def generate_vectors(compiled: CompiledInstance, config: AlgoConfig) -> List[MgaWeightVector]:
    """Pre-generate the full weight set from the root seed."""
    instance = compiled.instance
    groups = instance.planning_groups or {
        (instance.planning_names[j] if instance.planning_names else f"x{j}"): [j] for j in range(compiled.num_planning)
    }
    return combination_set(
        compiled.num_planning,
        groups,
        config.vectors_total,
        config.minmax_fraction,
        derive_seed(config.seed, "weights"),
    )


def plan_work(
    compiled: CompiledInstance,
    config: AlgoConfig,
    vectors: Optional[Sequence[MgaWeightVector]] = None,
) -> List[List[WorkItem]]:
    """
    Work lists, one per CGA instance.

    Without partitioning there is a single list holding every vector.
    """
    work, _ = _plan(compiled, config, vectors)
    return work


def _plan(
    compiled: CompiledInstance,
    config: AlgoConfig,
    vectors: Optional[Sequence[MgaWeightVector]],
) -> Tuple[List[List[WorkItem]], Optional[WeightPartition]]:
    vectors = list(vectors) if vectors is not None else generate_vectors(compiled, config)
    if not vectors:
        return [], None
    if not config.partition_k:
        return [[(i, w, None) for i, w in enumerate(vectors)]], None
    partition = partition_weights(
        vectors, config.partition_k, derive_seed(config.seed, "clustering"), config.partition_iters
    )
    work = [
        [(i, w, entry.cluster) for i, w in zip(entry.indices, entry.vectors)]
        for entry in schedule(partition, config.partition_per_instance)
    ]
    return work, partition


def prepare_pool(
    instance: Union[Instance, CompiledInstance],
    config: AlgoConfig,
    seed: Optional[CutPool] = None,
) -> CutPool:
    """
    Empty pool for a run, optionally seeded with the least-cost cuts of
    ``seed`` (a pool read from another process).

    Raises:
        InvalidInstanceError: instance fails validation
        DimensionMismatchError: seed pool built for another planning
            dimension, period count or period ids
    """
    compiled = compile_valid(instance)
    pool = CutPool(compiled.num_planning, compiled.num_periods, config.cut_strategy, config.first_n)
    if seed is None:
        return pool
    if (seed.num_planning, seed.num_periods) != (compiled.num_planning, compiled.num_periods):
        raise DimensionMismatchError(
            f"seed pool is for {seed.num_planning} planning columns and {seed.num_periods} periods, "
            f"instance has {compiled.num_planning} and {compiled.num_periods}"
        )
    unknown = sorted({cut.period for cut in seed.cuts} - set(compiled.instance.period_ids))
    if unknown:
        raise DimensionMismatchError(f"seed pool has cuts for unknown periods {unknown}")
    pool.insert([cut for cut in seed.cuts if cut.provenance == "least-cost"])
    logger.info(f"Seeded cut pool with {len(pool)} least-cost cuts")
    return pool


def _budget(base_cost: float, config: AlgoConfig, epsilon: Optional[float]) -> Budget:
    if epsilon is None:
        return compute_budget(base_cost, config.beta)
    return Budget(epsilon=epsilon, beta=0.0, base_cost=epsilon)


def _failed_record(message: str) -> SolutionRecord:
    return SolutionRecord(planning=[], period_costs=[], status="infeasible", message=message)


def _stats(least_cost: SolutionRecord, runs: List[MgaRun]) -> Dict[str, Optional[float]]:
    iterations = [run.record.iterations for run in runs]
    times = [run.solve_time for run in runs]
    return {
        "least_cost_iterations": float(least_cost.iterations),
        "mga_runs": float(len(runs)),
        "mga_converged": float(sum(run.record.converged for run in runs)),
        "iterations_median": float(np.median(iterations)) if runs else None,
        "solve_time_median": float(np.median(times)) if runs else None,
        "view_size_median": float(np.median([run.view_size for run in runs])) if runs else None,
        "pool_size_max": float(max(run.pool_size for run in runs)) if runs else None,
    }


def _run_work_list(
    compiled: CompiledInstance,
    config: AlgoConfig,
    budget: Budget,
    pool: CutPool,
    items: List[WorkItem],
) -> Tuple[List[MgaRun], List[str]]:
    runs: List[MgaRun] = []
    failures: List[str] = []
    with SubproblemRunner(compiled, workers=config.workers, backend=config.backend) as runner:
        for index, w, cluster in items:
            view_size = int(pool.view_indices(index).size)
            started = time.perf_counter()
            try:
                record = cga_solve_one(compiled, w, budget, config, pool, iterate_id=index, runner=runner)
            except PlannerError as e:
                logger.error(f"mga-{index} ({w.label}) failed: {e}", exc_info=True)
                record = _failed_record(str(e))
            if record.status != "converged":
                failures.append(f"mga-{index}: {record.status} {record.message}".strip())
            runs.append(
                MgaRun(
                    index=index,
                    weights=w,
                    record=record,
                    partition=cluster,
                    pool_size=len(pool),
                    view_size=view_size,
                    solve_time=time.perf_counter() - started,
                )
            )
    return runs, failures


def run_cga(
    instance: Union[Instance, CompiledInstance],
    config: AlgoConfig,
    epsilon: Optional[float] = None,
    vectors: Optional[Sequence[MgaWeightVector]] = None,
    pool: Optional[CutPool] = None,
) -> RunReport:
    """
    Decomposed end-to-end run.

    Benders least-cost, budget, weight set, optional partitioning, then
    one cutting-plane MGA solve per weight vector with cuts shared
    according to ``config.cut_strategy``.

    Args:
        instance: problem instance
        config: run configuration
        epsilon: budget override; computed from the least-cost cost when absent
        vectors: weight set override; generated from the root seed when absent
        pool: pool to fill (see ``prepare_pool``); least-cost cuts already in
            it warm-start the least-cost solve. A fresh pool when absent.

    Returns:
        RunReport; failed iterates are annotated in ``failures``
    """
    compiled = compile_valid(instance)
    name = compiled.instance.name
    logger.info(f"CGA run on '{name}': strategy={config.cut_strategy}, vectors={config.vectors_total}")

    if pool is None:
        pool = prepare_pool(compiled, config)
    elif (pool.num_planning, pool.num_periods) != (compiled.num_planning, compiled.num_periods):
        raise DimensionMismatchError(
            f"pool is for {pool.num_planning} planning columns and {pool.num_periods} periods, "
            f"instance has {compiled.num_planning} and {compiled.num_periods}"
        )
    seeded_cuts = len(pool)
    started = time.perf_counter()
    with SubproblemRunner(compiled, workers=config.workers, backend=config.backend) as runner:
        least_cost = benders_least_cost(compiled, config, pool, runner=runner)
    least_cost_time = time.perf_counter() - started

    report = RunReport(
        mode="cga",
        instance_name=name,
        instance_hash=instance_hash(compiled.instance),
        config=config,
        least_cost=least_cost,
        least_cost_time=least_cost_time,
        seeded_cuts=seeded_cuts,
    )
    if least_cost.total_cost is None:
        report.failures.append(f"least-cost: {least_cost.status} {least_cost.message}".strip())
        report.stats = _stats(least_cost, [])
        return report
    if not least_cost.converged:
        report.failures.append(f"least-cost: {least_cost.status}")

    budget = _budget(least_cost.total_cost, config, epsilon)
    report.base_cost = least_cost.total_cost
    report.epsilon = budget.epsilon

    work, report.partition = _plan(compiled, config, vectors)
    partitioned = bool(config.partition_k)
    pools = [pool.seeded_copy() if partitioned else pool for _ in work]

    if config.concurrent_instances and len(work) > 1:
        with ThreadPoolExecutor(max_workers=len(work), thread_name_prefix="cga") as executor:
            outcomes = list(
                executor.map(lambda args: _run_work_list(compiled, config, budget, *args), zip(pools, work))
            )
    else:
        outcomes = [_run_work_list(compiled, config, budget, p, items) for p, items in zip(pools, work)]

    runs = sorted((run for runs, _ in outcomes for run in runs), key=lambda run: run.index)
    report.mga = runs
    report.failures.extend(f for _, failures in outcomes for f in failures)
    report.stats = _stats(least_cost, runs)
    logger.info(f"✅ CGA run finished: {len(runs)} MGA iterates, {len(report.failures)} failure(s)")
    return report


def run_monolithic_mga(
    instance: Union[Instance, CompiledInstance],
    config: AlgoConfig,
    epsilon: Optional[float] = None,
    vectors: Optional[Sequence[MgaWeightVector]] = None,
) -> RunReport:
    """
    Monolithic end-to-end run over the same weight set as run_cga.

    Returns:
        RunReport shaped like run_cga's
    """
    compiled = compile_valid(instance)
    name = compiled.instance.name
    backend = get_backend(config.backend)
    logger.info(f"Monolithic MGA run on '{name}' with backend {backend.name}")

    started = time.perf_counter()
    least_cost = solve_monolith(build_least_cost(compiled), backend)
    report = RunReport(
        mode="monolithic",
        instance_name=name,
        instance_hash=instance_hash(compiled.instance),
        config=config,
        least_cost=least_cost,
        least_cost_time=time.perf_counter() - started,
    )
    if least_cost.total_cost is None:
        report.failures.append(f"least-cost: {least_cost.status} {least_cost.message}".strip())
        report.stats = _stats(least_cost, [])
        return report

    budget = _budget(least_cost.total_cost, config, epsilon)
    report.base_cost = least_cost.total_cost
    report.epsilon = budget.epsilon

    runs = []
    for items in plan_work(compiled, config, vectors):
        for index, w, cluster in items:
            started = time.perf_counter()
            try:
                record = solve_monolith(build_mga_monolith(compiled, w, budget.epsilon), backend)
            except PlannerError as e:
                logger.error(f"monolith mga-{index} failed: {e}", exc_info=True)
                record = _failed_record(str(e))
            if record.status != "converged":
                report.failures.append(f"mga-{index}: {record.status} {record.message}".strip())
            runs.append(
                MgaRun(index=index, weights=w, record=record, partition=cluster, solve_time=time.perf_counter() - started)
            )
    report.mga = sorted(runs, key=lambda run: run.index)
    report.stats = _stats(least_cost, report.mga)
    return report


def sandwich_check(
    cga_objective: Optional[float],
    monolith_epsilon: Optional[float],
    monolith_relaxed: Optional[float],
    tol: float = 1e-6,
) -> bool:
    """
    monolith(eps * (1 + delta)) - tol <= CGA objective <= monolith(eps) + tol,
    with tol scaled by max(1, |reference|).
    """
    if cga_objective is None or monolith_epsilon is None or monolith_relaxed is None:
        return False
    lower = monolith_relaxed - tol * max(1.0, abs(monolith_relaxed))
    upper = monolith_epsilon + tol * max(1.0, abs(monolith_epsilon))
    return lower <= cga_objective <= upper


def run_both(
    instance: Union[Instance, CompiledInstance],
    config: AlgoConfig,
    tol: float = 1e-6,
    pool: Optional[CutPool] = None,
) -> ComparisonReport:
    """
    CGA and monolithic runs on one budget, plus the monolith at
    epsilon * (1 + delta_mga), compared per weight vector. ``pool`` is
    passed to run_cga.
    """
    compiled = compile_valid(instance)
    cga = run_cga(compiled, config, pool=pool)
    if cga.epsilon is None:
        monolithic = run_monolithic_mga(compiled, config)
        return ComparisonReport(cga=cga, monolithic=monolithic)
    # the CGA runs already carry the scheduled vectors; no second partitioning
    monolithic = run_monolithic_mga(
        compiled,
        config.model_copy(update={"partition_k": 0}),
        epsilon=cga.epsilon,
        vectors=[run.weights for run in cga.mga],
    )

    backend = get_backend(config.backend)
    relaxed_epsilon = cga.epsilon * (1.0 + config.delta_mga)
    relaxed: List[SolutionRecord] = []
    rows: List[ComparisonRow] = []
    # monolithic runs were solved over the CGA runs' vectors, in the same order
    for cga_run, mono_run in zip(cga.mga, monolithic.mga):
        record = solve_monolith(build_mga_monolith(compiled, cga_run.weights, relaxed_epsilon), backend)
        relaxed.append(record)
        cga_objective = cga_run.record.mga_objective if cga_run.record.converged else None
        passed = sandwich_check(cga_objective, mono_run.record.mga_objective, record.mga_objective, tol)
        if not passed:
            logger.warning(
                f"mga-{cga_run.index}: sandwich check failed (cga={cga_objective}, "
                f"monolith={mono_run.record.mga_objective}, relaxed={record.mga_objective})"
            )
        rows.append(
            ComparisonRow(
                index=cga_run.index,
                label=cga_run.weights.label,
                cga_objective=cga_objective,
                monolith_epsilon=mono_run.record.mga_objective,
                monolith_relaxed=record.mga_objective,
                passed=passed,
            )
        )
    return ComparisonReport(cga=cga, monolithic=monolithic, relaxed=relaxed, rows=rows)


TRACE_COLUMNS = [
    "iterate_id",
    "iteration",
    "phase",
    "true_cost",
    "epsilon_ratio",
    "lower_bound",
    "upper_bound",
    "master_objective",
    "master_time",
    "subproblem_time",
]

_RECORD_FIELDS = {"planning", "period_costs", "total_cost", "mga_objective", "status", "iterations", "message"}


def _solutions_payload(report: RunReport) -> dict:
    return {
        "mode": report.mode,
        "instance_name": report.instance_name,
        "instance_hash": report.instance_hash,
        "epsilon": report.epsilon,
        "base_cost": report.base_cost,
        "least_cost": report.least_cost.model_dump(mode="json", include=_RECORD_FIELDS),
        "mga": [
            {
                "index": run.index,
                "label": run.weights.label,
                "weights": run.weights.weights,
                "partition": run.partition,
                "record": run.record.model_dump(mode="json", include=_RECORD_FIELDS),
            }
            for run in report.mga
        ],
        "failures": report.failures,
    }


def trace_frame(report: RunReport) -> pd.DataFrame:
    """One row per iteration of every solve in ``report``."""
    rows = []
    epsilon = report.epsilon
    solves = [("least-cost", report.least_cost)] + [(f"mga-{run.index}", run.record) for run in report.mga]
    for iterate_id, record in solves:
        for entry in record.trace:
            ratio = entry.budget_ratio
            if ratio is None and epsilon and entry.true_cost is not None:
                ratio = entry.true_cost / epsilon
            rows.append(
                {
                    "iterate_id": iterate_id,
                    "iteration": entry.iteration,
                    "phase": entry.phase,
                    "true_cost": entry.true_cost,
                    "epsilon_ratio": ratio,
                    "lower_bound": entry.lower_bound,
                    "upper_bound": entry.upper_bound,
                    "master_objective": entry.master_objective,
                    "master_time": entry.master_time,
                    "subproblem_time": entry.subproblem_time,
                }
            )
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def _emit_run(report: RunReport, out_dir: Path, prefix: str = "") -> List[Path]:
    written = [
        write_document(
            out_dir / f"{prefix}solutions.json", "solutions", settings.REPORT_SCHEMA_VERSION, _solutions_payload(report)
        )
    ]
    trace_path = out_dir / f"{prefix}trace.csv"
    trace_frame(report).to_csv(trace_path, index=False)
    written.append(trace_path)
    written.append(
        write_document(
            out_dir / f"{prefix}config.json",
            "config",
            settings.REPORT_SCHEMA_VERSION,
            {"algorithm": report.config.model_dump(mode="json"), "backend": report.config.backend or settings.LP_BACKEND},
        )
    )
    summary = {
        "mode": report.mode,
        "instance_name": report.instance_name,
        "succeeded": report.succeeded,
        "least_cost_status": report.least_cost.status,
        "least_cost_time": report.least_cost_time,
        "seeded_cuts": report.seeded_cuts,
        "stats": report.stats,
        "failures": report.failures,
    }
    written.append(write_document(out_dir / f"{prefix}summary.json", "summary", settings.REPORT_SCHEMA_VERSION, summary))
    if report.partition is not None:
        written.append(write_partition(report.partition, out_dir / f"{prefix}partition.json"))
    return written


def emit_reports(report: Union[RunReport, ComparisonReport], out_dir: Path) -> List[Path]:
    """
    Write the report bundle into ``out_dir``.

    solutions.json holds no timings, so runs that differ only in worker
    count produce identical files. Partitioned runs add partition.json.
    Both-mode comparisons write the CGA bundle, the monolithic bundle
    under a ``monolithic-`` prefix and comparison.csv.

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(report, ComparisonReport):
        written = _emit_run(report.cga, out_dir) + _emit_run(report.monolithic, out_dir, prefix="monolithic-")
        comparison_path = out_dir / "comparison.csv"
        pd.DataFrame(
            [row.model_dump() for row in report.rows], columns=list(ComparisonRow.model_fields)
        ).to_csv(comparison_path, index=False)
        written.append(comparison_path)
    else:
        written = _emit_run(report, out_dir)
    if settings.METRICS_ENABLED:
        written.append(write_metrics(out_dir / "metrics.prom"))
    logger.info(f"Reports written to {out_dir} ({len(written)} files)")
    return written
