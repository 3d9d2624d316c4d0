"""
CGA Planner - LP Backend Base

Backend-agnostic linear program carrier and the abstract backend
every solver adapter implements.

Dual sign convention (fixed for all backends): ``duals[i]`` is the
sensitivity of the optimal objective to the right-hand side of row
``i`` under minimization. Hence ``<=`` rows carry nonpositive duals,
``>=`` rows nonnegative duals and ``=`` rows free duals. For the
fixing rows ``x = x^k`` of a cut-generating subproblem the duals are
therefore the subgradient of the period cost in ``x``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import sparse

from core.exceptions import BackendError, DimensionMismatchError

logger = logging.getLogger(__name__)

LE, EQ, GE = "L", "E", "G"
SENSES = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


@dataclass
class LinearProgram:
    """Minimization LP/MILP: min c'x  s.t.  rows (sense) rhs,  lower <= x <= upper."""

    objective: np.ndarray
    matrix: sparse.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: Optional[np.ndarray] = None
    name: str = "lp"

    @property
    def num_cols(self) -> int:
        return int(self.objective.shape[0])

    @property
    def num_rows(self) -> int:
        return int(self.rhs.shape[0])

    @property
    def has_integers(self) -> bool:
        return self.integrality is not None and bool(np.any(self.integrality))

    def validate(self) -> None:
        """Raise DimensionMismatchError if the carrier is inconsistent."""
        n = self.num_cols
        if self.matrix.shape != (self.num_rows, n):
            raise DimensionMismatchError(
                f"{self.name}: matrix shape {self.matrix.shape} != ({self.num_rows}, {n})"
            )
        for label, arr, size in (
            ("senses", self.senses, self.num_rows),
            ("lower", self.lower, n),
            ("upper", self.upper, n),
        ):
            if arr.shape[0] != size:
                raise DimensionMismatchError(f"{self.name}: {label} has length {arr.shape[0]}, expected {size}")
        if self.integrality is not None and self.integrality.shape[0] != n:
            raise DimensionMismatchError(f"{self.name}: integrality has length {self.integrality.shape[0]}, expected {n}")
        bad = set(np.unique(self.senses)) - set(SENSES)
        if bad:
            raise DimensionMismatchError(f"{self.name}: unknown row senses {sorted(bad)}")

    def relaxed(self) -> "LinearProgram":
        """Copy without integrality flags."""
        return LinearProgram(
            objective=self.objective,
            matrix=self.matrix,
            senses=self.senses,
            rhs=self.rhs,
            lower=self.lower,
            upper=self.upper,
            integrality=None,
            name=self.name,
        )

    def scaled_rows(self) -> Tuple["LinearProgram", np.ndarray]:
        """
        Copy with every row divided by its largest absolute coefficient.

        Returns the scaled program and the positive row factors. Senses
        are unchanged; a dual ``u`` of scaled row ``i`` maps back to the
        original row as ``factors[i] * u``. Empty rows keep factor 1.
        """
        if self.num_rows == 0 or self.num_cols == 0:
            return self, np.ones(self.num_rows)
        largest = abs(self.matrix).max(axis=1)
        largest = np.asarray(largest.toarray() if sparse.issparse(largest) else largest, dtype=float).ravel()
        factors = np.ones(self.num_rows)
        nonzero = largest > 0.0
        factors[nonzero] = 1.0 / largest[nonzero]
        scaled = LinearProgram(
            objective=self.objective,
            matrix=sparse.csr_matrix(sparse.diags(factors) @ self.matrix),
            senses=self.senses,
            rhs=self.rhs * factors,
            lower=self.lower,
            upper=self.upper,
            integrality=self.integrality,
            name=self.name,
        )
        return scaled, factors

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute row or bound violation of ``x``."""
        act = self.row_activity(x)
        viol = np.zeros(self.num_rows)
        le = self.senses == LE
        ge = self.senses == GE
        eq = self.senses == EQ
        viol[le] = np.maximum(act[le] - self.rhs[le], 0.0)
        viol[ge] = np.maximum(self.rhs[ge] - act[ge], 0.0)
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        bound_viol = np.maximum(self.lower - x, 0.0).max(initial=0.0)
        bound_viol = max(bound_viol, np.maximum(x - self.upper, 0.0).max(initial=0.0))
        return float(max(viol.max(initial=0.0), bound_viol))


@dataclass
class SolveResult:
    """Outcome of one LP/MILP solve."""

    status: str
    primal: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: float = float("nan")
    is_basic: bool = False
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


class LinearProgramBuilder:
    """
    Incremental builder collecting columns and row blocks as sparse triplets.

    Used by the monolith and by both master problems so that every solver
    path produces the same LinearProgram carrier.
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self._cost: List[np.ndarray] = []
        self._lower: List[np.ndarray] = []
        self._upper: List[np.ndarray] = []
        self._integer: List[np.ndarray] = []
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []
        self._senses: List[np.ndarray] = []
        self._rhs: List[np.ndarray] = []
        self.num_cols = 0
        self.num_rows = 0

    def add_columns(
        self,
        cost: Sequence[float],
        lower: Sequence[float],
        upper: Sequence[float],
        integer: Optional[Sequence[bool]] = None,
    ) -> np.ndarray:
        """Append columns; returns their global indices."""
        cost = np.asarray(cost, dtype=float)
        size = cost.shape[0]
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (size,)).copy()
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (size,)).copy()
        if integer is None:
            integer = np.zeros(size, dtype=bool)
        integer = np.broadcast_to(np.asarray(integer, dtype=bool), (size,)).copy()
        self._cost.append(cost)
        self._lower.append(lower)
        self._upper.append(upper)
        self._integer.append(integer)
        index = np.arange(self.num_cols, self.num_cols + size)
        self.num_cols += size
        return index

    def add_rows(
        self,
        matrix,
        columns: np.ndarray,
        senses,
        rhs: Sequence[float],
    ) -> np.ndarray:
        """
        Append a block of rows.

        Args:
            matrix: dense array or scipy sparse matrix over ``columns`` (local column order)
            columns: global column index for each local column
            senses: one sense for all rows or a sequence of senses
            rhs: right-hand sides

        Returns:
            Global row indices of the new rows
        """
        block = sparse.coo_matrix(matrix)
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        nrows = rhs.shape[0]
        if block.shape[0] != nrows:
            raise DimensionMismatchError(f"{self.name}: row block has {block.shape[0]} rows but {nrows} rhs values")
        columns = np.asarray(columns, dtype=int)
        if block.shape[1] != columns.shape[0]:
            raise DimensionMismatchError(
                f"{self.name}: row block has {block.shape[1]} columns but {columns.shape[0]} column indices"
            )
        if isinstance(senses, str):
            senses = np.full(nrows, senses)
        else:
            senses = np.asarray(list(senses), dtype="<U1")
        self._rows.append(block.row + self.num_rows)
        self._cols.append(columns[block.col])
        self._vals.append(block.data.astype(float))
        self._senses.append(senses)
        self._rhs.append(rhs)
        index = np.arange(self.num_rows, self.num_rows + nrows)
        self.num_rows += nrows
        return index

    def build(self, with_integrality: bool = True) -> LinearProgram:
        def cat(parts, dtype):
            return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

        rows = cat(self._rows, int)
        cols = cat(self._cols, int)
        vals = cat(self._vals, float)
        matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(self.num_rows, self.num_cols))
        integer = cat(self._integer, bool)
        lp = LinearProgram(
            objective=cat(self._cost, float),
            matrix=matrix,
            senses=cat(self._senses, "<U1"),
            rhs=cat(self._rhs, float),
            lower=cat(self._lower, float),
            upper=cat(self._upper, float),
            integrality=integer if (with_integrality and integer.any()) else None,
            name=self.name,
        )
        lp.validate()
        return lp


class LPBackend(ABC):
    """
    Base class for LP/MILP backends.

    A backend instance is cheap and holds no solver state between calls,
    so each worker may own its own instance.
    """

    name = "abstract"

    @abstractmethod
    def _solve_lp(self, lp: LinearProgram, need_duals: bool) -> SolveResult:
        pass

    @abstractmethod
    def _solve_milp(self, lp: LinearProgram) -> SolveResult:
        pass

    def solve_lp(self, lp: LinearProgram, need_duals: bool = True) -> SolveResult:
        """
        Solve an LP without integrality.

        Args:
            lp: linear program (integrality flags must be absent)
            need_duals: request row duals and a basic (vertex) solution

        Returns:
            SolveResult with duals following the module sign convention
        """
        lp.validate()
        if lp.has_integers:
            raise ValueError(f"{lp.name}: solve_lp called with integrality flags; use solve_milp")
        result = self._solve_lp(lp, need_duals)
        return self._finalize(lp, result)

    def solve_milp(self, lp: LinearProgram) -> SolveResult:
        """Solve an LP with integrality flags; no duals are returned."""
        lp.validate()
        if not lp.has_integers:
            raise ValueError(f"{lp.name}: solve_milp requires at least one integrality flag")
        result = self._solve_milp(lp)
        result.duals = None
        if result.is_optimal:
            idx = np.flatnonzero(lp.integrality)
            result.primal[idx] = np.round(result.primal[idx])
        return self._finalize(lp, result)

    def solve(self, lp: LinearProgram, need_duals: bool = False) -> SolveResult:
        """Dispatch on the presence of integrality flags."""
        if lp.has_integers:
            return self.solve_milp(lp)
        return self.solve_lp(lp, need_duals=need_duals)

    def _finalize(self, lp: LinearProgram, result: SolveResult) -> SolveResult:
        if result.is_optimal and result.primal is None:
            raise BackendError(f"{self.name}: optimal status without primal values", status=result.status)
        # limit results keep their incumbent objective; it is not a bound
        if result.primal is not None:
            result.objective = float(lp.objective @ result.primal)
        return result


def clean_planning(values: np.ndarray, lower: np.ndarray, tol: float) -> np.ndarray:
    """
    Clamp planning values that sit marginally below their lower bound.

    Values within ``tol`` below the bound are set to the bound; anything
    further below means the backend returned an unusable point.
    """
    values = np.array(values, dtype=float, copy=True)
    lower = np.asarray(lower, dtype=float)
    finite = np.isfinite(lower)
    deficit = np.where(finite, lower - values, 0.0)
    if np.any(deficit > tol):
        worst = int(np.argmax(deficit))
        raise BackendError(
            f"Planning value {values[worst]:.3e} at column {worst} is below its lower bound {lower[worst]:.3e}"
        )
    clamp = finite & (deficit > 0.0)
    if np.any(clamp):
        logger.debug(f"Clamping {int(clamp.sum())} planning value(s) to their lower bound")
        values[clamp] = lower[clamp]
    return values
