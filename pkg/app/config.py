"""
Configuration management using Pydantic Settings
"""
import math
from typing import Literal, Optional, Tuple
from pydantic_settings import BaseSettings, SettingsConfigDict
from pathlib import Path


class Settings(BaseSettings):
    """Application configuration settings"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="allow"
    )

    # ===================================
    # Application Settings
    # ===================================
    env: Literal["development", "production"] = "development"
    log_level: str = "INFO"
    log_to_file: bool = False
    app_name: str = "Drift MLE"
    app_version: str = "0.1.0"

    # ===================================
    # Toeplitz Solver Settings
    # ===================================
    regular_grid_rtol: float = 1e-9
    reflection_guard: float = 1e-12
    solve_residual_rtol: float = 1e-8

    # ===================================
    # Weight Function (h_T) Settings
    # ===================================
    cells_per_unit_time: int = 4096
    max_cells: int = 16384
    neumann_tol: float = 1e-10
    neumann_max_iter: int = 100_000
    power_iterations: int = 50
    residual_boundary_fraction: float = 1.0 / 256

    # ===================================
    # Simulation Settings
    # ===================================
    circulant_negative_tol: float = 1e-9
    cholesky_oracle_max_n: int = 512

    # ===================================
    # Monte Carlo Experiment Settings
    # ===================================
    default_replications: int = 1000
    steps_per_unit_time: int = 1000
    default_seed: int = 20240917
    table1_hursts: Tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    table1_horizons: Tuple[float, ...] = (1.0, 10.0)
    table1_theta: float = 2.0

    # ===================================
    # Performance Tuning
    # ===================================
    max_workers: int = 4

    # ===================================
    # Caching Configuration
    # ===================================
    enable_cache: bool = True
    cache_dir: Path = Path("./data/cache")

    # ===================================
    # Paths
    # ===================================
    output_dir: Path = Path("./output")
    log_dir: Path = Path("./logs")

    @property
    def is_development(self) -> bool:
        """Check if running in development mode"""
        return self.env == "development"

    def default_cells(self, horizon: float) -> int:
        """Number of Nyström cells for a horizon T: cells_per_unit_time per unit of T, capped"""
        return max(2, min(math.ceil(self.cells_per_unit_time * horizon), self.max_cells))

    def default_path_steps(self, horizon: float, per_unit: Optional[int] = None) -> int:
        """Number of simulated path steps for a horizon T"""
        per_unit = self.steps_per_unit_time if per_unit is None else per_unit
        return max(1, round(per_unit * horizon))

    def boundary_cells(self, n_cells: int) -> int:
        """Cells excluded at each end when checking the residual of a singular weight"""
        return max(2, int(n_cells * self.residual_boundary_fraction))


# Global settings instance
settings = Settings()


if __name__ == "__main__":
    print("Configuration Status:")
    print("=" * 50)
    print(f"Environment: {settings.env}")
    print(f"Cells per unit T: {settings.cells_per_unit_time} (cap {settings.max_cells})")
    print(f"Neumann tolerance: {settings.neumann_tol}")
    print(f"Replications: {settings.default_replications}")
    print(f"Cache Enabled: {settings.enable_cache} ({settings.cache_dir})")
    print(f"Output directory: {settings.output_dir}")
    print("=" * 50)
