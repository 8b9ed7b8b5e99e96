"""
Application settings using Pydantic Settings.

Loads numerical defaults from environment variables and .env file.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="CTRL_RADIUS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False
    )

    # Rank decisions (relative to the largest singular value)
    rank_rel_tol: float = Field(default=1e-8, gt=0, lt=1)

    # Multiplier of n * machine eps for singular-pencil and infinite-eigenvalue decisions
    pencil_tol_factor: float = Field(default=1e3, gt=0)

    # STLN solver defaults
    stln_omega: float = Field(default=1e8, gt=0)
    stln_epsilon: float = Field(default=1e-3, gt=0)
    stln_max_iter: int = Field(default=200, ge=1)

    # Extra iterations after convergence to drive the residual to roundoff
    stln_polish_iter: int = Field(default=10, ge=0)

    # Further partition columns tried when the chosen one does not converge
    stln_fallback_columns: int = Field(default=3, ge=0)

    # Mode search seeding extra STLN runs
    mode_search: bool = True
    mode_restarts: int = Field(default=4, ge=0)
    mode_polish: int = Field(default=3, ge=1)
    mode_seed: int = 0

    # Threads for multistart runs and sweeps
    stln_workers: int = Field(default=1, ge=1)

    log_level: str = "INFO"


# Global settings instance
settings = Settings()
