"""
Configuration loader using Pydantic Settings.
Loads engine defaults from environment variables (prefix MSB_) or a .env file.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    """Engine defaults loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MSB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Multivariate normal engine
    mvn_tol: float = Field(default=1e-7, ge=1e-8, description="Target absolute error per MVN CDF")
    mvn_seed: int = Field(default=20_231_117, ge=0, description="Seed for QMC lattice shifts")

    # Inclusion-exclusion
    prune_eps: float = Field(default=0.0, ge=0.0, description="Superset pruning threshold (0 = off)")

    # Monte Carlo
    seed: int = Field(default=12_345, ge=0, description="Master seed for path simulation")
    paths: int = Field(default=1_000_000, ge=1, description="Number of simulated paths")
    batches: int = Field(default=100, ge=2, description="Batches used for the standard error")
    bridge: bool = Field(default=True, description="Brownian-bridge hit test between step times")

    # Execution
    workers: int = Field(default=1, ge=1, description="Worker threads for subset terms and MC batches")

    # Curved barriers
    rule: str = Field(default="midlog", description="Discretization rule: left|right|midlog|midprice")

    # Paths
    tables_dir: str = Field(default="data/expected", description="Directory with expected-value tables")

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")


# Global settings instance
settings = Settings()
