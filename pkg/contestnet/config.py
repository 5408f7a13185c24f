import os
from dataclasses import dataclass
from dotenv import load_dotenv


# Load variables from .env if present
load_dotenv()


def _default_threads() -> int:
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class Settings:
    # General
    ENV: str = os.getenv("CONTESTNET_ENV", "development")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "WARNING")
    LOG_TO_FILE: bool = (os.getenv("LOG_TO_FILE", "false").lower() == "true")
    LOG_DIR: str = os.getenv("LOG_DIR", "logs")
    THREADS: int = int(os.getenv("CONTESTNET_THREADS", str(_default_threads())))

    # Solver
    SOLVER_TOL: float = float(os.getenv("CONTESTNET_SOLVER_TOL", "1e-10"))
    BR_MAX_SWEEPS: int = int(os.getenv("CONTESTNET_BR_MAX_SWEEPS", "10000"))
    NEWTON_MAX_ITER: int = int(os.getenv("CONTESTNET_NEWTON_MAX_ITER", "1000"))
    LINE_SEARCH_HALVINGS: int = 30
    FLOW_MAX_STEPS: int = int(os.getenv("CONTESTNET_FLOW_MAX_STEPS", "200000"))
    REPLY_XTOL: float = 1e-12
    SINGULAR_EFFORT: float = 1e-12

    # Stability
    CLASS_TOL_REL: float = float(os.getenv("CONTESTNET_CLASS_TOL_REL", "1e-6"))
    LFPS_EXHAUSTIVE_LIMIT: int = int(os.getenv("CONTESTNET_LFPS_EXHAUSTIVE_LIMIT", "12"))
    STABILITY_TOL: float = float(os.getenv("CONTESTNET_STABILITY_TOL", "1e-9"))

    # Observability
    TRACING_ENABLED: bool = (os.getenv("CONTESTNET_TRACING", "false").lower() == "true")
    METRICS_FILE: str = os.getenv("CONTESTNET_METRICS_FILE", "")


settings = Settings()
