"""
Kasamawashi — Центральная конфигурация
"""
import enum
import os

from pydantic_settings import BaseSettings


class ProfileKind(str, enum.Enum):
    FLAT = "flat"
    PARABOLOID = "paraboloid"
    QUARTIC = "quartic"
    CONCAVE_CAP = "concave_cap"
    CONE = "cone"
    CUSTOM = "custom"


class FamilyKind(str, enum.Enum):
    VERTEX = "Vertex"
    CRITICAL_PARALLEL = "CriticalParallel"
    TILTED_POINT = "TiltedPoint"
    SEGMENT = "Segment"


class EigenType(str, enum.Enum):
    Z = "Z"
    C = "C"
    R_PLUS = "R+"
    R_MINUS = "R-"
    F_PLUS = "F+"
    F_MINUS = "F-"


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    INCONCLUSIVE = "Inconclusive"
    CONVERGED = "ConvergedToVertex"
    DIVERGED = "Diverged"


class ProbeDirection(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


class HaltReason(str, enum.Enum):
    COMPLETED = "completed"
    DOMAIN_EXIT = "domain_exit"
    EVENT = "event"


def _default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))


class Settings(BaseSettings):
    """Настройки приложения из .env файла и переменных окружения"""

    # Параллелизм
    threads: int = _default_threads()

    # Логи и вывод
    log_level: str = "INFO"
    logs_dir: str = "logs"
    output_dir: str = "output"

    # Профили
    default_r_max: float = 10.0
    regularity_samples: int = 10001

    # Равновесия
    equilibrium_grid_points: int = 10001
    bisection_xtol: float = 1e-12
    critical_zero_tol: float = 1e-12

    # Сохраняющиеся величины
    bound_grid_points: int = 10001

    # Линеаризация
    classification_eps: float = 1e-9
    fd_step: float = 1e-6
    vertex_singularity_radius: float = 1e-8

    # Многообразия
    seed_offset: float = 1e-4
    convergence_radius: float = 1e-6

    class Config:
        env_file = ".env"
        env_prefix = "KASAMAWASHI_"


settings = Settings()
