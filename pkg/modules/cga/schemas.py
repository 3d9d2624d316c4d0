"""
CGA Planner - CGA Schemas
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Budget(BaseModel):
    """Total cost cap epsilon = (1 + beta) * base_cost"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float
    beta: float = Field(..., ge=0)
    base_cost: float = Field(..., ge=0)

    @model_validator(mode="after")
    def consistent(self):
        expected = (1.0 + self.beta) * self.base_cost
        if abs(self.epsilon - expected) > 1e-9 * max(abs(expected), 1.0):
            raise ValueError(f"epsilon {self.epsilon} != (1 + {self.beta}) * {self.base_cost}")
        return self

    def limit(self, delta_mga: float) -> float:
        """Budget test threshold epsilon * (1 + delta_mga)"""
        return self.epsilon * (1.0 + delta_mga)
