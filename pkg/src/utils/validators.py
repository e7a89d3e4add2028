"""
Kasamawashi — Валидация сценариев
JSON-сценарий: профиль, физические параметры, начальное состояние,
настройки интегратора, развёртки и пробы многообразий.
"""
import json
import math
from pathlib import Path
from typing import Any, Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from src.core.config import ProbeDirection, ProfileKind
from src.mechanics.dynamics import FullState, ReducedState, SystemParams
from src.mechanics.integrator import IntegratorConfig
from src.mechanics.profile import (
    ConcaveCap,
    Flat,
    Paraboloid,
    Profile,
    Quartic,
    TruncatedCone,
    polynomial_profile,
    regularity_check,
)


class ValidationError(Exception):
    """Ошибка сценария со списком всех найденных нарушений"""

    def __init__(self, messages: list[str]):
        self.messages = messages
        super().__init__("; ".join(messages))


# Ключи профиля, допустимые для каждого вида
_PROFILE_KEYS = {
    ProfileKind.FLAT: set(),
    ProfileKind.PARABOLOID: {"c"},
    ProfileKind.CONCAVE_CAP: {"c"},
    ProfileKind.QUARTIC: {"c2", "c4"},
    ProfileKind.CONE: {"slope", "delta"},
    ProfileKind.CUSTOM: {"psi", "label"},
}


class ProfileSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ProfileKind
    r_max: float = Field(10.0, gt=0.0)
    c: Optional[float] = None
    c2: Optional[float] = None
    c4: Optional[float] = None
    slope: Optional[float] = None
    delta: Optional[float] = None
    psi: Optional[list[float]] = None
    label: Optional[str] = None

    @model_validator(mode="after")
    def check_kind_keys(self):
        errors = []
        allowed = _PROFILE_KEYS[self.kind]
        for key in ("c", "c2", "c4", "slope", "delta", "psi", "label"):
            if getattr(self, key) is not None and key not in allowed:
                errors.append(f"key '{key}' is not used by profile kind '{self.kind.value}'")

        if self.kind == ProfileKind.PARABOLOID and self.c is None:
            errors.append("paraboloid needs 'c'")
        if self.kind == ProfileKind.CONCAVE_CAP and self.c is not None and not self.c < 0.0:
            errors.append("concave_cap needs c < 0")
        if self.kind == ProfileKind.CONE:
            if self.slope is None or not self.slope >= 0.0:
                errors.append("cone needs 'slope' >= 0")
            if self.delta is None or not 0.0 < self.delta < self.r_max:
                errors.append("cone needs 0 < delta < r_max")
        if self.kind == ProfileKind.CUSTOM:
            if not self.psi:
                errors.append("custom profile needs polynomial coefficients 'psi'")
            elif self.psi[0] != 0.0:
                errors.append("custom psi must vanish at u=0 (psi[0] = 0)")

        if errors:
            raise ValueError("; ".join(errors))
        return self


class ParamsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: float = 0.4
    g_hat: float = 1.0
    Omega: float = 0.0
    alpha: float = 0.0

    @field_validator("k")
    @classmethod
    def check_k(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("k must lie in (0,1)")
        return v

    @field_validator("g_hat")
    @classmethod
    def check_g_hat(cls, v):
        if not v > 0.0:
            raise ValueError("g_hat must be positive")
        return v

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v):
        if not 0.0 <= v < 0.5 * math.pi:
            raise ValueError("alpha must lie in [0, pi/2)")
        return v

    @field_validator("Omega")
    @classmethod
    def check_omega(cls, v):
        if not math.isfinite(v):
            raise ValueError("Omega must be finite")
        return v


class InitialStateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x: tuple[float, float]
    v: tuple[float, float] = (0.0, 0.0)
    omega_z: float = 0.0
    attitude: Optional[tuple[
        tuple[float, float, float],
        tuple[float, float, float],
        tuple[float, float, float],
    ]] = None


class IntegratorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rel_tol: float = Field(1e-10, gt=0.0)
    abs_tol: float = Field(1e-12, gt=0.0)
    max_step: Optional[float] = Field(None, gt=0.0)
    t_end: float = Field(10.0, gt=0.0)
    dense_output_dt: float = Field(0.1, gt=0.0)

    @model_validator(mode="after")
    def check_output_step(self):
        if self.dense_output_dt > self.t_end:
            raise ValueError("dense_output_dt must not exceed t_end")
        return self


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    omega_z_range: tuple[float, float, int] = (-12.0, 12.0, 201)
    Omega_range: tuple[float, float, int] = (-12.0, 12.0, 201)
    f2_0: Optional[float] = None
    x1: Optional[float] = None

    @field_validator("omega_z_range", "Omega_range")
    @classmethod
    def check_range(cls, v):
        lo, hi, n = v
        if n < 2:
            raise ValueError("grid needs n >= 2")
        if not hi > lo:
            raise ValueError("grid needs max > min")
        return v


class ProbeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    omega_z: float = 0.0
    which: ProbeDirection = ProbeDirection.STABLE
    seed_offset: Optional[float] = Field(None, gt=0.0)


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: ProfileSpec
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    initial_state: Optional[InitialStateSpec] = None
    integrator: IntegratorSpec = Field(default_factory=IntegratorSpec)
    sweep: Optional[SweepSpec] = None
    probe: Optional[ProbeSpec] = None

    def build_params(self) -> SystemParams:
        return SystemParams(**self.params.model_dump())

    def build_profile(self) -> Profile:
        return build_profile(self.profile)

    def build_integrator(self) -> IntegratorConfig:
        data = self.integrator.model_dump()
        if data["max_step"] is None:
            data["max_step"] = math.inf
        return IntegratorConfig(**data)

    def build_initial_state(self) -> ReducedState:
        if self.initial_state is None:
            raise ValidationError(["scenario has no 'initial_state'"])
        st = self.initial_state
        return ReducedState(x=st.x, v=st.v, omega_z=st.omega_z)

    def build_full_state(self) -> FullState:
        reduced = self.build_initial_state()
        if self.initial_state.attitude is None:
            return FullState(reduced)
        return FullState(reduced, R=self.initial_state.attitude)


def build_profile(spec: ProfileSpec) -> Profile:
    """Профиль из описания сценария; нарушение регулярности — ошибка сценария"""
    if spec.kind == ProfileKind.FLAT:
        profile = Flat(r_max=spec.r_max)
    elif spec.kind == ProfileKind.PARABOLOID:
        profile = Paraboloid(r_max=spec.r_max, c=spec.c)
    elif spec.kind == ProfileKind.CONCAVE_CAP:
        profile = ConcaveCap(r_max=spec.r_max, c=-0.5 if spec.c is None else spec.c)
    elif spec.kind == ProfileKind.QUARTIC:
        profile = Quartic(r_max=spec.r_max, c2=spec.c2 or 0.0, c4=spec.c4 or 0.0)
    elif spec.kind == ProfileKind.CONE:
        profile = TruncatedCone(r_max=spec.r_max, slope=spec.slope, delta=spec.delta)
    else:
        profile = polynomial_profile(spec.psi, r_max=spec.r_max, label=spec.label or "custom")

    violations = regularity_check(profile)
    if violations:
        raise ValidationError([
            f"profile: regularity f'' > -(1+f'^2)^(3/2) fails at "
            f"{len(violations)} samples (first r={violations[0]!r})"
        ])
    return profile


def _degree_keys(data: Any, path: str = "") -> list[str]:
    found = []
    if isinstance(data, dict):
        for key, value in data.items():
            where = f"{path}.{key}" if path else str(key)
            if str(key).endswith("_deg"):
                found.append(f"{where}: angles are accepted in radians only")
            found.extend(_degree_keys(value, where))
    elif isinstance(data, list):
        for i, value in enumerate(data):
            found.extend(_degree_keys(value, f"{path}[{i}]"))
    return found


def _format_error(err: dict) -> str:
    where = ".".join(str(part) for part in err["loc"]) or "scenario"
    message = err["msg"].removeprefix("Value error, ")
    return f"{where}: {message}"


def validate_scenario(data: Any) -> Scenario:
    """Проверка разобранного JSON; все нарушения собираются в один список"""
    if not isinstance(data, dict):
        raise ValidationError(["scenario must be a JSON object"])

    messages = _degree_keys(data)
    try:
        scenario = Scenario.model_validate(data)
    except PydanticValidationError as e:
        messages.extend(_format_error(err) for err in e.errors())
        scenario = None

    if messages:
        logger.error(f"Scenario validation failed: {messages}")
        raise ValidationError(messages)
    return scenario


def read_scenario_json(path) -> Any:
    """Разбор JSON-файла; ошибка разбора с номером строки и столбца"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError([f"{path}: cannot read scenario: {e}"])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError([
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ])
    return data


def load_scenario(path) -> Scenario:
    scenario = validate_scenario(read_scenario_json(path))
    logger.debug(f"Loaded scenario {path} (profile {scenario.profile.kind.value})")
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict:
    return scenario.model_dump(exclude_none=True)


def write_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2) + "\n", encoding="utf-8",
    )
