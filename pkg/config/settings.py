"""
Configuration management for ltisym.
"""
from pydantic_settings import BaseSettings
from pydantic import Field
from typing import Dict


class Settings(BaseSettings):
    """Numerical policy and logging settings with environment variable support."""

    # Tolerances (all relative to problem scale)
    feas_tol: float = Field(default=1e-8, alias="LTISYM_FEAS_TOL")
    null_tol: float = Field(default=1e-10, alias="LTISYM_NULL_TOL")
    sym_tol: float = Field(default=1e-10, alias="LTISYM_SYM_TOL")
    definiteness_tol: float = Field(default=1e-8, alias="LTISYM_DEFINITENESS_TOL")

    # Fixed-point maps Q <- (Q + G Q^-1 G)/2 and W <- (W + Ω W^-1 Ω)/2
    fixed_point_tol: float = Field(default=1e-9, alias="LTISYM_FIXED_POINT_TOL")
    fixed_point_max_iter: int = Field(default=500, alias="LTISYM_FIXED_POINT_MAX_ITER")
    projection_max_iter: int = Field(default=500, alias="LTISYM_PROJECTION_MAX_ITER")

    # Frequency cross-checks
    frequency_points: int = Field(default=19, alias="LTISYM_FREQUENCY_POINTS")
    eigen_guard: float = Field(default=1e-6, alias="LTISYM_EIGEN_GUARD")

    # Hankel grids
    grid_max_points: int = Field(default=20001, alias="LTISYM_GRID_MAX_POINTS")
    grid_horizon_cap: float = Field(default=100.0, alias="LTISYM_GRID_HORIZON_CAP")

    default_seed: int = Field(default=0, alias="LTISYM_DEFAULT_SEED")

    # Logging
    log_level: str = Field(default="WARNING", alias="LOG_LEVEL")
    log_format: str = Field(default="text", alias="LOG_FORMAT")
    log_file: str = Field(default="", alias="LOG_FILE")

    def tolerances(self) -> Dict[str, float]:
        """Tolerances in force, as recorded in every report."""
        return {
            "feas_tol": self.feas_tol,
            "null_tol": self.null_tol,
            "sym_tol": self.sym_tol,
            "definiteness_tol": self.definiteness_tol,
            "fixed_point_tol": self.fixed_point_tol,
        }

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False
        populate_by_name = True


# Global settings instance
settings = Settings()
