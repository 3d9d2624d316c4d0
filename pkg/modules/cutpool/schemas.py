"""
CGA Planner - Cut Pool Schemas
"""

from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional

from modules.benders.schemas import Cut

CutStrategy = Literal["none", "least-cost-only", "all", "first-n"]


class PoolDocument(BaseModel):
    """On-disk form of a cut pool"""

    model_config = ConfigDict(extra="forbid")

    num_planning: int = Field(..., ge=1)
    num_periods: int = Field(..., ge=1)
    strategy: CutStrategy
    first_n: Optional[int] = Field(None, ge=0)
    lc_iterations: int = Field(0, ge=0)
    mga_iterations: List[int] = []
    cuts: List[Cut] = []
