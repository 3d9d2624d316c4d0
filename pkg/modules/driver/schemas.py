"""
CGA Planner - Driver Schemas

Run configuration and report carriers.
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional

from core.config import settings
from modules.cutpool.schemas import CutStrategy
from modules.mga_weights.schemas import MgaWeightVector
from modules.model.schemas import SolutionRecord
from modules.partition.schemas import WeightPartition

RunMode = Literal["cga", "monolithic", "both"]


class AlgoConfig(BaseModel):
    """Per-run algorithm configuration; defaults come from settings"""

    model_config = ConfigDict(extra="forbid")

    beta: float = Field(default_factory=lambda: settings.DEFAULT_BETA, ge=0)
    delta_ls: float = Field(default_factory=lambda: settings.DEFAULT_DELTA_LS, ge=0)
    delta_mga: float = Field(default_factory=lambda: settings.DEFAULT_DELTA_MGA, ge=0)
    k_ls: int = Field(default_factory=lambda: settings.DEFAULT_K_LS, ge=1)
    k_mga: int = Field(default_factory=lambda: settings.DEFAULT_K_MGA, ge=1)
    cut_strategy: CutStrategy = "least-cost-only"
    first_n: Optional[int] = Field(None, ge=0)
    partition_k: int = Field(0, ge=0)
    partition_per_instance: int = Field(16, ge=1)
    partition_iters: int = Field(default_factory=lambda: settings.DEFAULT_PARTITION_ITERS, ge=1)
    vectors_total: int = Field(8, ge=0)
    minmax_fraction: float = Field(0.75, ge=0, le=1)
    seed: int = 0
    mode: RunMode = "cga"
    workers: int = Field(default_factory=lambda: settings.DEFAULT_WORKERS, ge=1)
    concurrent_instances: bool = False
    backend: Optional[str] = None

    @field_validator("backend")
    @classmethod
    def normalize_backend(cls, v: Optional[str]) -> Optional[str]:
        return v.strip().lower() if v else None

    @model_validator(mode="after")
    def partition_bounds(self):
        if self.partition_k and self.partition_k > self.vectors_total:
            raise ValueError(f"partition_k {self.partition_k} exceeds vectors_total {self.vectors_total}")
        return self


class MgaRun(BaseModel):
    """One MGA iterate: its weights, solution and pool bookkeeping"""

    index: int
    weights: MgaWeightVector
    record: SolutionRecord
    partition: Optional[int] = None
    pool_size: int = 0
    view_size: int = 0
    solve_time: float = 0.0


class RunReport(BaseModel):
    """Result of run_cga or run_monolithic_mga"""

    mode: Literal["cga", "monolithic"]
    instance_name: str
    instance_hash: str
    config: AlgoConfig
    least_cost: SolutionRecord
    least_cost_time: float = 0.0
    epsilon: Optional[float] = None
    base_cost: Optional[float] = None
    mga: List[MgaRun] = []
    partition: Optional[WeightPartition] = None
    seeded_cuts: int = 0
    stats: Dict[str, Optional[float]] = {}
    failures: List[str] = []

    @property
    def succeeded(self) -> bool:
        return not self.failures and all(run.record.converged for run in self.mga) and self.least_cost.converged


class ComparisonRow(BaseModel):
    """CGA objective against monolithic optima at epsilon and epsilon * (1 + delta)"""

    index: int
    label: str
    cga_objective: Optional[float] = None
    monolith_epsilon: Optional[float] = None
    monolith_relaxed: Optional[float] = None
    passed: bool


class ComparisonReport(BaseModel):
    """Both-mode output"""

    cga: RunReport
    monolithic: RunReport
    relaxed: List[SolutionRecord] = []
    rows: List[ComparisonRow] = []

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)
