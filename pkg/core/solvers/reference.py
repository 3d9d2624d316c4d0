"""
CGA Planner - Reference Backend

Dense two-phase tableau simplex (Bland's rule) with a depth-first
branch-and-bound on top. Only meant for small test instances and as an
independent oracle for the HiGHS adapter.
"""

import logging
import math
from dataclasses import replace
from typing import List, Tuple

import numpy as np

from core.solvers.base import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LPBackend,
    SolveResult,
)

logger = logging.getLogger(__name__)

_TOL = 1e-9


class _StandardForm:
    """min c'z  s.t.  A z = b (b >= 0), z >= 0, with the map back to x."""

    def __init__(self, lp: LinearProgram):
        n = lp.num_cols
        dense = lp.matrix.toarray()

        # x = offset + transform @ z
        offset = np.zeros(n)
        transform_cols: List[np.ndarray] = []
        bound_rows: List[Tuple[int, float]] = []
        for j in range(n):
            lo, up = lp.lower[j], lp.upper[j]
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lo):
                offset[j] = lo
                transform_cols.append(unit)
                if np.isfinite(up):
                    bound_rows.append((len(transform_cols) - 1, up - lo))
            elif np.isfinite(up):
                offset[j] = up
                transform_cols.append(-unit)
            else:
                transform_cols.append(unit)
                transform_cols.append(-unit)
        transform = np.column_stack(transform_cols) if transform_cols else np.zeros((n, 0))
        nz = transform.shape[1]

        rows = dense @ transform
        rhs = lp.rhs - dense @ offset
        senses = list(lp.senses)
        for col, width in bound_rows:
            row = np.zeros(nz)
            row[col] = 1.0
            rows = np.vstack([rows, row])
            rhs = np.append(rhs, width)
            senses.append(LE)

        m = rows.shape[0]
        slack_cols = []
        for i, sense in enumerate(senses):
            if sense == EQ:
                continue
            col = np.zeros(m)
            col[i] = 1.0 if sense == LE else -1.0
            slack_cols.append(col)
        slack = np.column_stack(slack_cols) if slack_cols else np.zeros((m, 0))

        matrix = np.hstack([rows, slack])
        flip = np.where(rhs < 0, -1.0, 1.0)
        self.matrix = matrix * flip[:, None]
        self.rhs = rhs * flip
        self.flip = flip
        self.cost = np.concatenate([lp.objective @ transform, np.zeros(slack.shape[1])])
        self.offset = offset
        self.transform = transform
        self.num_z = nz
        self.num_original_rows = lp.num_rows

    def to_original(self, w: np.ndarray) -> np.ndarray:
        return self.offset + self.transform @ w[: self.num_z]


class ReferenceBackend(LPBackend):
    """
    Dense reference simplex.

    Always returns vertex solutions and duals. Exponential worst case;
    do not use beyond a few hundred rows.
    """

    name = "reference"

    def __init__(self, max_iterations: int = 20000, max_nodes: int = 20000):
        self.max_iterations = max_iterations
        self.max_nodes = max_nodes

    # Simplex core

    def _pivot(self, tableau: np.ndarray, row: int, col: int) -> None:
        tableau[row] /= tableau[row, col]
        for i in range(tableau.shape[0]):
            if i != row and abs(tableau[i, col]) > 0.0:
                tableau[i] -= tableau[i, col] * tableau[row]

    def _iterate(self, tableau: np.ndarray, basis: List[int], cost: np.ndarray, allowed: int) -> str:
        for _ in range(self.max_iterations):
            reduced = cost[:allowed] - cost[basis] @ tableau[:, :allowed]
            entering = np.flatnonzero(reduced < -_TOL)
            if entering.size == 0:
                return OPTIMAL
            col = int(entering[0])
            column = tableau[:, col]
            positive = np.flatnonzero(column > _TOL)
            if positive.size == 0:
                return UNBOUNDED
            ratios = tableau[positive, -1] / column[positive]
            best = ratios.min()
            ties = positive[ratios <= best + _TOL]
            row = int(min(ties, key=lambda i: basis[i]))
            self._pivot(tableau, row, col)
            basis[row] = col
        return LIMIT

    def _solve_lp(self, lp: LinearProgram, need_duals: bool) -> SolveResult:
        form = _StandardForm(lp)
        m, width = form.matrix.shape

        # [ A | I (artificials) | b ]; the artificial block tracks B^-1
        tableau = np.hstack([form.matrix, np.eye(m), form.rhs[:, None]])
        basis = list(range(width, width + m))

        phase_one_cost = np.concatenate([np.zeros(width), np.ones(m)])
        status = self._iterate(tableau, basis, phase_one_cost, width + m)
        if status == LIMIT:
            return SolveResult(status=LIMIT, message="phase one iteration limit")
        infeasibility = float(phase_one_cost[basis] @ tableau[:, -1])
        if infeasibility > 1e-7:
            return SolveResult(status=INFEASIBLE, message=f"phase one residual {infeasibility:.3e}")

        # Drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            if basis[r] < width:
                keep.append(r)
                continue
            candidates = np.flatnonzero(np.abs(tableau[r, :width]) > 1e-7)
            if candidates.size:
                col = int(candidates[0])
                self._pivot(tableau, r, col)
                basis[r] = col
                keep.append(r)
        tableau = tableau[keep]
        basis = [basis[r] for r in keep]

        phase_two_cost = np.concatenate([form.cost, np.zeros(m)])
        status = self._iterate(tableau, basis, phase_two_cost, width)
        if status != OPTIMAL:
            return SolveResult(status=status, message=f"phase two {status}")

        w = np.zeros(width + m)
        w[basis] = tableau[:, -1]
        x = form.to_original(w)

        result = SolveResult(status=OPTIMAL, primal=x, is_basic=True, message="reference simplex optimal")
        if need_duals:
            inverse = tableau[:, width:width + m]
            y = phase_two_cost[basis] @ inverse
            duals = (y * form.flip)[: form.num_original_rows]
            result.duals = np.asarray(duals, dtype=float)
        return result

    # Branch and bound

    def _solve_milp(self, lp: LinearProgram) -> SolveResult:
        relaxed = lp.relaxed()
        integer = np.flatnonzero(lp.integrality)
        incumbent = None
        incumbent_obj = math.inf
        stack = [(lp.lower.copy(), lp.upper.copy())]
        nodes = 0

        while stack:
            if nodes >= self.max_nodes:
                logger.warning(f"{lp.name}: branch-and-bound node limit {self.max_nodes} reached")
                status = LIMIT
                break
            nodes += 1
            lower, upper = stack.pop()
            res = self._solve_lp(replace(relaxed, lower=lower, upper=upper), need_duals=False)
            if res.status == INFEASIBLE:
                continue
            if res.status == UNBOUNDED:
                return SolveResult(status=UNBOUNDED, message="relaxation unbounded")
            if res.status != OPTIMAL:
                continue
            obj = float(lp.objective @ res.primal)
            if obj >= incumbent_obj - 1e-9:
                continue
            values = res.primal[integer]
            fractional = np.abs(values - np.round(values))
            if fractional.max(initial=0.0) <= 1e-6:
                incumbent, incumbent_obj = res.primal, obj
                continue
            pick = int(np.argmax(fractional))
            col = int(integer[pick])
            value = res.primal[col]

            up_lower = lower.copy()
            up_lower[col] = math.ceil(value)
            down_upper = upper.copy()
            down_upper[col] = math.floor(value)
            stack.append((up_lower, upper.copy()))
            stack.append((lower.copy(), down_upper))
        else:
            status = OPTIMAL

        if incumbent is None:
            return SolveResult(status=INFEASIBLE if status == OPTIMAL else LIMIT, message=f"{nodes} nodes explored")
        return SolveResult(status=status, primal=incumbent, message=f"{nodes} nodes explored")
