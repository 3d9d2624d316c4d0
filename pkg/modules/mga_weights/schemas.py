"""
CGA Planner - MGA Weight Schemas
"""

from pydantic import BaseModel, ConfigDict, model_validator
from typing import List, Literal, Optional

WeightMethod = Literal["random", "minmax", "custom"]


class MgaWeightVector(BaseModel):
    """Objective weights over the planning columns plus how they were made"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weights: List[float]
    method: WeightMethod = "custom"
    group: Optional[str] = None
    sign: Optional[int] = None
    seed: Optional[int] = None
    combination: bool = False

    @model_validator(mode="after")
    def check_method(self):
        if self.method in ("random", "minmax") and not any(self.weights):
            raise ValueError(f"{self.method} weight vector must not be all zero")
        if self.method == "minmax":
            if any(v not in (0.0, 1.0, -1.0) for v in self.weights):
                raise ValueError("minmax weights must be 0, +1 or -1")
            if self.sign not in (1, -1) or self.group is None:
                raise ValueError("minmax weights need a group and a sign of +1 or -1")
        return self

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def label(self) -> str:
        if self.method == "minmax":
            return f"{'min' if self.sign == 1 else 'max'}:{self.group}"
        if self.method == "random":
            return f"random:{self.seed}"
        return "custom"
