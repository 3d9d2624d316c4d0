"""
CGA Planner - Configuration Module

Process-wide settings and solver defaults.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator
from typing import List
from functools import lru_cache


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # Application
    APP_NAME: str = "CGA Planner"
    APP_VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # LP backend
    LP_BACKEND: str = Field("highs", description="highs or reference")
    LP_TIME_LIMIT: float = 600.0
    MIP_REL_GAP: float = 1e-9
    PRIMAL_CLAMP_TOL: float = 1e-6

    # Algorithm defaults
    DEFAULT_BETA: float = 0.1
    DEFAULT_DELTA_LS: float = 1e-3
    DEFAULT_DELTA_MGA: float = 0.005
    DEFAULT_K_LS: int = 200
    DEFAULT_K_MGA: int = 200
    DEFAULT_WORKERS: int = 1
    DEFAULT_PARTITION_ITERS: int = 100

    # Instances
    SLACK_PENALTY_FACTOR: float = 1e4
    INSTANCE_SCHEMA_VERSION: int = 1
    POOL_SCHEMA_VERSION: int = 1
    REPORT_SCHEMA_VERSION: int = 1
    DEFAULT_TECHNOLOGIES: List[str] = ["gas", "wind", "solar"]

    # Monitoring
    METRICS_ENABLED: bool = True

    @field_validator("DEFAULT_TECHNOLOGIES", mode="before")
    @classmethod
    def parse_technologies(cls, v):
        """Parse technology list from string or list"""
        if isinstance(v, str):
            return [tech.strip() for tech in v.split(",") if tech.strip()]
        return v

    @field_validator("LP_BACKEND")
    @classmethod
    def normalize_backend(cls, v: str) -> str:
        return v.strip().lower()


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Global settings instance
settings = get_settings()
