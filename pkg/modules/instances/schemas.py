"""
CGA Planner - Instance Generator Schemas

Desk-scale capacity expansion specifications.
"""

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Optional

from core.config import settings

# Default technology templates; availability profiles are drawn per zone
TECHNOLOGY_TEMPLATES: Dict[str, Dict[str, float]] = {
    "gas": {"capex": 60.0, "varcost": 30.0, "max_cap": 200.0, "emission_rate": 0.4},
    "wind": {"capex": 80.0, "varcost": 0.0, "max_cap": 200.0, "emission_rate": 0.0},
    "solar": {"capex": 50.0, "varcost": 0.0, "max_cap": 200.0, "emission_rate": 0.0},
}


class GeneratorSpec(BaseModel):
    """One expandable generator in a zone"""

    model_config = ConfigDict(extra="forbid")

    zone: int = Field(..., ge=1)
    technology: str = "gas"
    capex: float = Field(..., ge=0)
    varcost: float = Field(..., ge=0)
    max_cap: float = Field(..., gt=0)
    # Per-hour fractions over the whole horizon, or one period's hours repeated
    availability: Optional[List[float]] = None
    integral_block: Optional[float] = Field(None, gt=0)
    emission_rate: float = Field(0.0, ge=0)

    @field_validator("availability")
    @classmethod
    def availability_fraction(cls, v):
        if v is not None and any(a < 0 or a > 1 for a in v):
            raise ValueError("availability must lie in [0, 1]")
        return v


class LinkSpec(BaseModel):
    """Expandable transmission link between two zones"""

    model_config = ConfigDict(extra="forbid")

    from_zone: int = Field(..., ge=1)
    to_zone: int = Field(..., ge=1)
    capex: float = Field(20.0, ge=0)
    max_cap: float = Field(100.0, gt=0)

    @model_validator(mode="after")
    def distinct_zones(self):
        if self.from_zone == self.to_zone:
            raise ValueError("link must connect two different zones")
        return self


class InstanceSpec(BaseModel):
    """
    Generator input.

    When ``generators`` is empty every zone receives one generator per
    entry of ``technologies`` built from the default templates. When
    ``demand`` is absent, seeded sinusoid-plus-noise profiles scaled to
    ``peak_demand`` are drawn.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = "generated"
    zones: int = Field(1, ge=1)
    periods: int = Field(1, ge=1)
    hours_per_period: int = Field(24, ge=1)
    technologies: List[str] = Field(default_factory=lambda: list(settings.DEFAULT_TECHNOLOGIES))
    generators: List[GeneratorSpec] = []
    links: List[LinkSpec] = []
    # demand[z][t] over all hours of the horizon
    demand: Optional[List[List[float]]] = None
    peak_demand: float = Field(100.0, ge=0)
    seed: int = 0
    integer_mode: bool = False
    default_block: float = Field(10.0, gt=0)
    emission_cap: Optional[float] = Field(None, ge=0)
    slack_penalty: Optional[float] = Field(None, gt=0)

    @field_validator("technologies")
    @classmethod
    def known_technologies(cls, v):
        unknown = [tech for tech in v if tech not in TECHNOLOGY_TEMPLATES]
        if unknown:
            raise ValueError(f"unknown technologies {unknown}; templates exist for {sorted(TECHNOLOGY_TEMPLATES)}")
        return v

    @property
    def total_hours(self) -> int:
        return self.periods * self.hours_per_period

    @model_validator(mode="after")
    def consistent(self):
        for gen in self.generators:
            if gen.zone > self.zones:
                raise ValueError(f"generator zone {gen.zone} exceeds zone count {self.zones}")
            if gen.availability is not None and len(gen.availability) not in (self.hours_per_period, self.total_hours):
                raise ValueError(
                    f"availability length {len(gen.availability)} must be {self.hours_per_period} or {self.total_hours}"
                )
        for link in self.links:
            if max(link.from_zone, link.to_zone) > self.zones:
                raise ValueError(f"link {link.from_zone}-{link.to_zone} references a missing zone")
        if self.demand is not None:
            if len(self.demand) != self.zones or any(len(row) != self.total_hours for row in self.demand):
                raise ValueError(f"demand must be {self.zones} rows of {self.total_hours} hours")
            if any(v < 0 for row in self.demand for v in row):
                raise ValueError("demand must be nonnegative")
        return self
