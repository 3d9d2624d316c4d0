"""
CGA Planner - Model Service Layer

Instance validation, cost evaluation and the compiled numerical view
used by every solver path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np
from scipy import sparse

from core.exceptions import DimensionMismatchError, InvalidInstanceError
from modules.model.schemas import (
    ConstraintSet,
    Instance,
    OperationalBlock,
    SparseMatrix,
    Violation,
)


def _upper_array(values: Sequence) -> np.ndarray:
    return np.array([np.inf if v is None else float(v) for v in values], dtype=float)


@dataclass(frozen=True)
class CompiledBlock:
    """Numerical view of one OperationalBlock"""

    period: int
    coupling: sparse.csr_matrix
    op_matrix: sparse.csr_matrix
    rhs: np.ndarray
    op_cost: np.ndarray
    constraints: sparse.csr_matrix
    senses: np.ndarray
    constraint_rhs: np.ndarray
    op_lower: np.ndarray
    op_upper: np.ndarray
    balance_rows: np.ndarray
    slack_penalty: float

    @property
    def num_ops(self) -> int:
        return int(self.op_cost.shape[0])

    @property
    def num_slacks(self) -> int:
        return int(self.balance_rows.shape[0])

    @property
    def full_cost(self) -> np.ndarray:
        """Cost over operational columns followed by slack columns."""
        return np.concatenate([self.op_cost, np.full(self.num_slacks, self.slack_penalty)])

    def slack_matrix(self) -> sparse.csr_matrix:
        """+1 on each balance row, one column per slack."""
        q = self.constraints.shape[0]
        s = self.num_slacks
        return sparse.csr_matrix((np.ones(s), (self.balance_rows, np.arange(s))), shape=(q, s))

    def operational_rows(self) -> sparse.csr_matrix:
        """Operational constraint rows over (y, slack)."""
        if not self.num_slacks:
            return self.constraints
        return sparse.hstack([self.constraints, self.slack_matrix()], format="csr")


@dataclass(frozen=True)
class CompiledInstance:
    """Numerical view of an Instance, built once per solve"""

    instance: Instance
    planning_cost: np.ndarray
    planning_lower: np.ndarray
    planning_upper: np.ndarray
    planning_integer: np.ndarray
    planning_matrix: sparse.csr_matrix
    planning_senses: np.ndarray
    planning_rhs: np.ndarray
    blocks: List[CompiledBlock]

    @property
    def num_planning(self) -> int:
        return int(self.planning_cost.shape[0])

    @property
    def num_periods(self) -> int:
        return len(self.blocks)

    @property
    def has_integers(self) -> bool:
        return bool(self.planning_integer.any())


def compile_instance(instance: Union[Instance, CompiledInstance]) -> CompiledInstance:
    """Build dense/sparse arrays for an instance (idempotent)."""
    if isinstance(instance, CompiledInstance):
        return instance
    blocks = []
    for block in instance.periods:
        constraints = block.op_constraints
        blocks.append(
            CompiledBlock(
                period=block.period,
                coupling=block.coupling_matrix.to_scipy(),
                op_matrix=block.op_matrix.to_scipy(),
                rhs=np.asarray(block.rhs, dtype=float),
                op_cost=np.asarray(block.op_cost, dtype=float),
                constraints=constraints.matrix.to_scipy(),
                senses=np.asarray(constraints.senses, dtype="<U1"),
                constraint_rhs=np.asarray(constraints.rhs, dtype=float),
                op_lower=np.asarray(block.op_lower, dtype=float),
                op_upper=_upper_array(block.op_upper),
                balance_rows=np.asarray(block.balance_rows, dtype=int),
                slack_penalty=float(block.slack_penalty),
            )
        )
    planning = instance.planning_constraints
    return CompiledInstance(
        instance=instance,
        planning_cost=np.asarray(instance.planning_cost, dtype=float),
        planning_lower=np.asarray(instance.planning_lower, dtype=float),
        planning_upper=_upper_array(instance.planning_upper),
        planning_integer=np.asarray(instance.planning_integer, dtype=bool),
        planning_matrix=planning.matrix.to_scipy(),
        planning_senses=np.asarray(planning.senses, dtype="<U1"),
        planning_rhs=np.asarray(planning.rhs, dtype=float),
        blocks=blocks,
    )


# Validation


def _check_triplets(matrix: SparseMatrix, field: str) -> List[Violation]:
    violations = []
    if not (len(matrix.rows) == len(matrix.cols) == len(matrix.values)):
        violations.append(Violation(field=field, rule="triplet", message="rows/cols/values lengths differ"))
        return violations
    nrows, ncols = matrix.shape
    if any(i < 0 or i >= nrows for i in matrix.rows) or any(j < 0 or j >= ncols for j in matrix.cols):
        violations.append(Violation(field=field, rule="triplet", message=f"entry index outside shape {matrix.shape}"))
    if not all(np.isfinite(matrix.values)):
        violations.append(Violation(field=field, rule="finite", message="non-finite coefficient"))
    return violations


def _check_constraint_set(constraints: ConstraintSet, num_cols: int, field: str) -> List[Violation]:
    violations = _check_triplets(constraints.matrix, f"{field}.matrix")
    nrows, ncols = constraints.matrix.shape
    if ncols != num_cols:
        violations.append(
            Violation(field=f"{field}.matrix", rule="dimension", message=f"{ncols} columns, expected {num_cols}")
        )
    if len(constraints.senses) != nrows or len(constraints.rhs) != nrows:
        violations.append(
            Violation(
                field=field,
                rule="dimension",
                message=f"{nrows} rows but {len(constraints.senses)} senses and {len(constraints.rhs)} rhs values",
            )
        )
    return violations


def _check_block(block: OperationalBlock, index: int, n: int) -> List[Violation]:
    field = f"periods[{index}]"
    violations: List[Violation] = []
    m = block.num_ops
    r = len(block.rhs)

    for name, matrix, expected in (
        ("coupling_matrix", block.coupling_matrix, (r, n)),
        ("op_matrix", block.op_matrix, (r, m)),
    ):
        violations.extend(_check_triplets(matrix, f"{field}.{name}"))
        if tuple(matrix.shape) != expected:
            violations.append(
                Violation(
                    field=f"{field}.{name}",
                    rule="dimension",
                    message=f"shape {tuple(matrix.shape)}, expected {expected}",
                )
            )

    violations.extend(_check_constraint_set(block.op_constraints, m, f"{field}.op_constraints"))

    if len(block.op_lower) != m or len(block.op_upper) != m:
        violations.append(Violation(field=f"{field}.op_bounds", rule="dimension", message=f"bounds must have length {m}"))
    if any(c < 0 for c in block.op_cost):
        violations.append(Violation(field=f"{field}.op_cost", rule="nonnegative", message="negative operational cost"))

    q = len(block.op_constraints.senses)
    for row in block.balance_rows:
        if row < 0 or row >= q:
            violations.append(Violation(field=f"{field}.balance_rows", rule="index", message=f"row {row} out of range"))
        elif block.op_constraints.senses[row] != "E":
            violations.append(
                Violation(field=f"{field}.balance_rows", rule="balance", message=f"row {row} is not an equality row")
            )

    if not block.slack_penalty > 0:
        violations.append(
            Violation(field=f"{field}.slack_penalty", rule="positivity", message=f"{block.slack_penalty} is not > 0")
        )
    elif block.op_cost and block.slack_penalty <= max(block.op_cost):
        violations.append(
            Violation(
                field=f"{field}.slack_penalty",
                rule="dominance",
                message=f"{block.slack_penalty} does not exceed max op_cost {max(block.op_cost)}",
            )
        )
    return violations


def validate_instance(instance: Instance) -> List[Violation]:
    """
    Check every Instance/OperationalBlock invariant.

    Args:
        instance: instance to check

    Returns:
        List of violations naming field and rule; empty if valid
    """
    violations: List[Violation] = []
    n = instance.num_planning

    if n == 0:
        violations.append(Violation(field="planning_cost", rule="nonempty", message="no planning variables"))
    for name in ("planning_lower", "planning_upper", "planning_integer"):
        size = len(getattr(instance, name))
        if size != n:
            violations.append(Violation(field=name, rule="dimension", message=f"length {size}, expected {n}"))
    if instance.planning_names and len(instance.planning_names) != n:
        violations.append(Violation(field="planning_names", rule="dimension", message=f"expected {n} names"))
    if len(instance.planning_lower) == n and len(instance.planning_upper) == n:
        for j, (lo, up) in enumerate(zip(instance.planning_lower, instance.planning_upper)):
            if up is not None and lo > up:
                violations.append(Violation(field="planning_bounds", rule="bounds", message=f"column {j}: {lo} > {up}"))

    violations.extend(_check_constraint_set(instance.planning_constraints, n, "planning_constraints"))

    for group, members in instance.planning_groups.items():
        if not members or any(j < 0 or j >= n for j in members):
            violations.append(
                Violation(field=f"planning_groups[{group}]", rule="index", message="empty group or index out of range")
            )

    if not instance.periods:
        violations.append(Violation(field="periods", rule="nonempty", message="at least one period is required"))
    elif instance.period_ids != list(range(1, len(instance.periods) + 1)):
        violations.append(
            Violation(field="periods", rule="contiguous", message=f"period ids {instance.period_ids} are not 1..P")
        )

    for index, block in enumerate(instance.periods):
        violations.extend(_check_block(block, index, n))

    return violations


# Costs


def compile_valid(instance: Union[Instance, CompiledInstance]) -> CompiledInstance:
    """Compile ``instance`` after checking it; raises InvalidInstanceError."""
    compiled = compile_instance(instance)
    violations = validate_instance(compiled.instance)
    if violations:
        raise InvalidInstanceError(violations)
    return compiled


def period_cost(block: Union[OperationalBlock, CompiledBlock], op_vector: Sequence[float]) -> float:
    """
    Operational cost of one period.

    ``op_vector`` holds the operational columns, optionally followed by
    the slack columns of the block's balance rows.
    """
    y = np.asarray(op_vector, dtype=float)
    op_cost = np.asarray(block.op_cost, dtype=float)
    m = op_cost.shape[0]
    s = block.num_slacks
    if y.shape[0] == m:
        return float(op_cost @ y)
    if y.shape[0] == m + s:
        return float(op_cost @ y[:m] + block.slack_penalty * y[m:].sum())
    raise DimensionMismatchError(f"period {block.period}: operational vector has length {y.shape[0]}, expected {m} or {m + s}")


def evaluate_total_cost(
    instance: Union[Instance, CompiledInstance],
    planning: Sequence[float],
    op_decisions: Sequence[Sequence[float]],
) -> float:
    """
    Total system cost c'x + sum_p d_p'y_p.

    Args:
        instance: problem instance
        planning: planning vector x
        op_decisions: one operational vector per period, in period order

    Returns:
        Total cost
    """
    compiled = compile_instance(instance)
    x = np.asarray(planning, dtype=float)
    if x.shape[0] != compiled.num_planning:
        raise DimensionMismatchError(f"planning vector has length {x.shape[0]}, expected {compiled.num_planning}")
    if len(op_decisions) != compiled.num_periods:
        raise DimensionMismatchError(f"{len(op_decisions)} operational vectors for {compiled.num_periods} periods")
    total = float(compiled.planning_cost @ x)
    for block, y in zip(compiled.blocks, op_decisions):
        total += period_cost(block, y)
    return total
