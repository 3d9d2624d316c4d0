"""
CGA Planner - LP Backends

Backend selection and module-level solve helpers.
"""

from typing import Optional

from core.config import settings
from core.solvers.base import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LinearProgramBuilder,
    LPBackend,
    SolveResult,
    clean_planning,
)
from core.solvers.highs import HighsBackend
from core.solvers.reference import ReferenceBackend

_BACKENDS = {
    "highs": HighsBackend,
    "reference": ReferenceBackend,
}


def get_backend(name: Optional[str] = None) -> LPBackend:
    """
    Create a fresh backend handle.

    Args:
        name: backend name; defaults to the LP_BACKEND setting

    Returns:
        New backend instance (handles are never shared between workers)
    """
    key = (name or settings.LP_BACKEND).strip().lower()
    if key not in _BACKENDS:
        raise ValueError(f"Unknown LP backend '{key}'; choose one of {sorted(_BACKENDS)}")
    return _BACKENDS[key]()


def solve_lp(lp: LinearProgram, need_duals: bool = True, backend: Optional[LPBackend] = None) -> SolveResult:
    return (backend or get_backend()).solve_lp(lp, need_duals=need_duals)


def solve_milp(lp: LinearProgram, backend: Optional[LPBackend] = None) -> SolveResult:
    return (backend or get_backend()).solve_milp(lp)


__all__ = [
    "EQ",
    "GE",
    "LE",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "LIMIT",
    "LinearProgram",
    "LinearProgramBuilder",
    "LPBackend",
    "SolveResult",
    "HighsBackend",
    "ReferenceBackend",
    "clean_planning",
    "get_backend",
    "solve_lp",
    "solve_milp",
]
