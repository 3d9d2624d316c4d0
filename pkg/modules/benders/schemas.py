"""
CGA Planner - Benders Schemas
"""

from pydantic import BaseModel, ConfigDict, model_validator
from typing import List, Literal, Optional

Provenance = Literal["least-cost", "mga"]


class Cut(BaseModel):
    """
    One optimality cut  theta_p >= value + subgradient'(x - point).

    ``iterate_id`` identifies the MGA iterate that generated the cut
    (absent for least-cost cuts).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    period: int
    point: List[float]
    value: float
    subgradient: List[float]
    provenance: Provenance = "least-cost"
    iterate_id: Optional[int] = None
    birth_iteration: int = 0

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.subgradient) != len(self.point):
            raise ValueError(f"subgradient length {len(self.subgradient)} != point length {len(self.point)}")
        if self.provenance == "mga" and self.iterate_id is None:
            raise ValueError("mga cuts need an iterate_id")
        return self

    @property
    def tag(self) -> str:
        return "least-cost" if self.provenance == "least-cost" else f"mga({self.iterate_id})"

    @property
    def intercept(self) -> float:
        """value - subgradient'point"""
        return self.value - sum(g * p for g, p in zip(self.subgradient, self.point))
