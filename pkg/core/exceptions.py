"""
CGA Planner - Exceptions

Error types shared by the solver modules.
"""

from typing import List, Optional


class PlannerError(Exception):
    """Base class for all planner errors"""


class DimensionMismatchError(PlannerError, ValueError):
    """Vector or matrix dimensions do not agree with the instance"""


class InvalidInstanceError(PlannerError, ValueError):
    """Instance failed validation"""

    def __init__(self, violations: List[object]):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        super().__init__(f"Instance has {len(self.violations)} violation(s): {summary}")


class BackendError(PlannerError, RuntimeError):
    """LP/MILP backend failed to produce a usable answer"""

    def __init__(self, message: str, status: Optional[str] = None):
        self.status = status
        super().__init__(message)


class InstanceFormatError(PlannerError, ValueError):
    """Malformed instance, pool or report document"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class SchemaVersionError(InstanceFormatError):
    """Document schema version is not supported"""
