"""
CGA Planner - Model Schemas

Pydantic models for the two-block planning problem: planning columns
shared by every period, plus one operational block per period.
"""

from pydantic import BaseModel, ConfigDict, Field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from scipy import sparse

Sense = Literal["L", "E", "G"]
Phase = Literal["lp", "int"]
Status = Literal["converged", "iteration-limit", "infeasible"]


class SparseMatrix(BaseModel):
    """Sparse matrix as (row, col, value) triplets in a fixed entry order"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    shape: Tuple[int, int]
    rows: List[int] = []
    cols: List[int] = []
    values: List[float] = []

    def to_scipy(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (np.asarray(self.values, dtype=float), (np.asarray(self.rows, dtype=int), np.asarray(self.cols, dtype=int))),
            shape=self.shape,
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    @classmethod
    def from_scipy(cls, matrix) -> "SparseMatrix":
        coo = sparse.coo_matrix(matrix)
        return cls(
            shape=(int(coo.shape[0]), int(coo.shape[1])),
            rows=[int(i) for i in coo.row],
            cols=[int(j) for j in coo.col],
            values=[float(v) for v in coo.data],
        )

    @classmethod
    def empty(cls, num_cols: int) -> "SparseMatrix":
        return cls(shape=(0, num_cols))


class ConstraintSet(BaseModel):
    """Rows ``matrix @ v (sense) rhs``"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    matrix: SparseMatrix
    senses: List[Sense] = []
    rhs: List[float] = []

    @classmethod
    def empty(cls, num_cols: int) -> "ConstraintSet":
        return cls(matrix=SparseMatrix.empty(num_cols))


class OperationalBlock(BaseModel):
    """
    One operational period p.

    Coupling rows: ``coupling_matrix @ x + op_matrix @ y <= rhs``.
    Rows listed in ``balance_rows`` (equality rows of ``op_constraints``)
    receive a nonnegative shortfall slack priced at ``slack_penalty``.
    Upper bounds of ``None`` mean unbounded.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    period: int
    op_cost: List[float]
    coupling_matrix: SparseMatrix
    op_matrix: SparseMatrix
    rhs: List[float]
    op_constraints: ConstraintSet
    op_lower: List[float]
    op_upper: List[Optional[float]]
    balance_rows: List[int] = []
    slack_penalty: float
    op_names: List[str] = []

    @property
    def num_ops(self) -> int:
        return len(self.op_cost)

    @property
    def num_slacks(self) -> int:
        return len(self.balance_rows)


class Instance(BaseModel):
    """Full two-block problem: planning costs and constraints plus operational periods"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    planning_cost: List[float]
    planning_lower: List[float]
    planning_upper: List[Optional[float]]
    planning_integer: List[bool]
    planning_constraints: ConstraintSet
    planning_names: List[str] = []
    planning_groups: Dict[str, List[int]] = {}
    periods: List[OperationalBlock]

    @property
    def num_planning(self) -> int:
        return len(self.planning_cost)

    @property
    def has_integers(self) -> bool:
        return any(self.planning_integer)

    @property
    def period_ids(self) -> List[int]:
        return [block.period for block in self.periods]


class Violation(BaseModel):
    """One failed instance rule"""

    field: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule} ({self.message})"


class TraceEntry(BaseModel):
    """One solver iteration"""

    iteration: int
    phase: Phase = "lp"
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    gap: Optional[float] = None
    true_cost: Optional[float] = None
    budget_ratio: Optional[float] = None
    master_objective: Optional[float] = None
    master_time: float = 0.0
    subproblem_time: float = 0.0


class SolutionRecord(BaseModel):
    """Planning solution with its realized period costs and iteration trace"""

    planning: List[float]
    period_costs: List[float]
    total_cost: Optional[float] = None
    mga_objective: Optional[float] = None
    trace: List[TraceEntry] = Field(default_factory=list)
    status: Status
    iterations: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"
