"""
CGA Planner - Partition Schemas
"""

from pydantic import BaseModel
from typing import List

from modules.mga_weights.schemas import MgaWeightVector


class WeightCluster(BaseModel):
    """One direction cluster: unit centroid and its members in input order"""

    centroid: List[float]
    member_indices: List[int] = []
    members: List[MgaWeightVector] = []


class WeightPartition(BaseModel):
    """Assignment of every input vector to exactly one cluster"""

    clusters: List[WeightCluster]
    k: int
    seed: int
    labels: List[int]
    iterations: int = 0


class WorkList(BaseModel):
    """Vectors handed to one CGA instance"""

    cluster: int
    indices: List[int]
    vectors: List[MgaWeightVector]
