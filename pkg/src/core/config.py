from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    # Root finding
    ROOT_TOL: float = 1e-9          # residual acceptance, relative to the local scale
    POLISH_TOL: float = 1e-12       # Newton step tolerance, relative to 1 + |k|
    COARSE_TOL: float = 1e-2        # isolating box diameter before polishing
    MAX_DEPTH: int = 24
    MAX_MULTIPLICITY: int = 4
    JITTER_ATTEMPTS: int = 8
    WINDING_TOL: float = 1e-3

    # Linear algebra and expansion
    CONDITION_WARNING: float = 1e12
    DISTINCTNESS_TOL: float = 1e-9  # min pairwise distance / diameter
    DELAY_MERGE_TOL: float = 1e-12  # relative to N * diam(Y)
    MAX_EXPANSION_N: int = 8

    # Optimization and certificates
    NEWTON_MAX_ITER: int = 50
    CERT_TOL: float = 1e-8
    MINOR_FLOOR: float = 1e-300
    VANISHING_MINOR_TOL: float = 1e-10

    # Runtime
    THREADS: int = 0                # 0 means available parallelism
    SEED: int = 0
    LOG_LEVEL: str = "INFO"

    # HTTP
    API_KEY: Optional[str] = None

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

# Create a single, importable instance of the settings
settings = Settings()
