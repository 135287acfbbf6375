from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="WIENERVAR_", extra="ignore")

    # Parallelism (None = all cores); results never depend on it
    THREADS: Optional[int] = None
    LOG_LEVEL: str = "INFO"

    # Monte Carlo defaults
    DEFAULT_N_STEPS: int = 256
    DEFAULT_N_PATHS: int = 100_000

    # Output
    OUTPUT_DIR: str = "./runs"

    # Appendix quadrature
    DOMAIN_HALF_WIDTH_SIGMAS: float = 12.0

    # Diagnostics thresholds
    ESS_MIN_FRACTION: float = 0.01
    MARGINAL_SLACK: float = 1e-9


settings = Settings()
