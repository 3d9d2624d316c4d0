"""
CGA Planner - HiGHS Backend

Adapter around scipy's HiGHS interfaces (``linprog`` for LPs with duals,
``milp`` for mixed-integer masters).
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from core.config import settings
from core.exceptions import BackendError
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

_LINPROG_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}
_MILP_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}


class HighsBackend(LPBackend):
    """
    HiGHS through scipy.optimize.

    Subproblem solves (``need_duals=True``) use the dual simplex so the
    returned point is a vertex and the duals are well defined. Masters
    may use HiGHS' automatic method choice.
    """

    name = "highs"

    def __init__(self, time_limit: Optional[float] = None, mip_rel_gap: Optional[float] = None):
        self.time_limit = time_limit if time_limit is not None else settings.LP_TIME_LIMIT
        self.mip_rel_gap = mip_rel_gap if mip_rel_gap is not None else settings.MIP_REL_GAP

    @staticmethod
    def _split_rows(lp: LinearProgram) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        inequality = np.flatnonzero((lp.senses == LE) | (lp.senses == GE))
        equality = np.flatnonzero(lp.senses == EQ)
        # >= rows are negated into <= form
        sign = np.where(lp.senses[inequality] == GE, -1.0, 1.0)
        return inequality, equality, sign

    def _solve_lp(self, lp: LinearProgram, need_duals: bool) -> SolveResult:
        scaled, factors = lp.scaled_rows()
        method = "highs-ds" if need_duals else "highs"
        res = self._linprog(scaled, method)
        if res.status not in _LINPROG_STATUS:
            fallback = "highs-ipm" if method == "highs-ds" else "highs-ds"
            logger.warning(f"{lp.name}: HiGHS {method} returned status {res.status}; retrying with {fallback}")
            method = fallback
            res = self._linprog(scaled, method)

        status = _LINPROG_STATUS.get(res.status)
        if status is None:
            raise BackendError(f"{lp.name}: HiGHS failed ({res.status}): {res.message}", status=str(res.status))

        # ds and ipm (crossover on) both end at a vertex
        result = SolveResult(status=status, message=res.message, is_basic=(method != "highs"))
        if status != OPTIMAL:
            logger.debug(f"{lp.name}: HiGHS status {status}: {res.message}")
            return result

        result.primal = np.asarray(res.x, dtype=float)
        if need_duals:
            inequality, equality, sign = self._split_rows(scaled)
            duals = np.zeros(lp.num_rows)
            if inequality.size:
                duals[inequality] = sign * np.asarray(res.ineqlin.marginals, dtype=float)
            if equality.size:
                duals[equality] = np.asarray(res.eqlin.marginals, dtype=float)
            result.duals = factors * duals
        return result

    def _linprog(self, lp: LinearProgram, method: str):
        inequality, equality, sign = self._split_rows(lp)
        matrix = lp.matrix.tocsr()

        a_ub = b_ub = a_eq = b_eq = None
        if inequality.size:
            a_ub = sparse.diags(sign) @ matrix[inequality]
            b_ub = sign * lp.rhs[inequality]
        if equality.size:
            a_eq = matrix[equality]
            b_eq = lp.rhs[equality]

        bounds = np.column_stack([lp.lower, lp.upper]) if lp.num_cols else None
        try:
            return linprog(
                lp.objective,
                A_ub=a_ub,
                b_ub=b_ub,
                A_eq=a_eq,
                b_eq=b_eq,
                bounds=bounds,
                method=method,
                options={"time_limit": self.time_limit},
            )
        except ValueError as e:
            raise BackendError(f"{lp.name}: HiGHS rejected the problem: {e}") from e

    def _solve_milp(self, lp: LinearProgram) -> SolveResult:
        scaled, _ = lp.scaled_rows()
        constraints = None
        if scaled.num_rows:
            row_lower = np.where(scaled.senses == LE, -np.inf, scaled.rhs)
            row_upper = np.where(scaled.senses == GE, np.inf, scaled.rhs)
            constraints = LinearConstraint(scaled.matrix, row_lower, row_upper)
        try:
            res = milp(
                lp.objective,
                integrality=lp.integrality.astype(int),
                bounds=Bounds(lp.lower, lp.upper),
                constraints=constraints,
                options={"time_limit": self.time_limit, "mip_rel_gap": self.mip_rel_gap},
            )
        except ValueError as e:
            raise BackendError(f"{lp.name}: HiGHS rejected the problem: {e}") from e

        status = _MILP_STATUS.get(res.status)
        if status is None:
            raise BackendError(f"{lp.name}: HiGHS MILP failed ({res.status}): {res.message}", status=str(res.status))

        result = SolveResult(status=status, message=res.message)
        if res.x is not None and status in (OPTIMAL, LIMIT):
            result.primal = np.asarray(res.x, dtype=float)
        if status == LIMIT:
            logger.warning(f"{lp.name}: MILP stopped at a limit: {res.message}")
        return result
