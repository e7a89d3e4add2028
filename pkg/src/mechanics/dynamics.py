"""
Kasamawashi — SO(3)-редуцированная динамика
Векторное поле на M₅ = D × ℝ² × ℝ ∋ (x, v, ω_z), восстановление ω_x, ω_y
из условия качения и независимая f-форма уравнений как оракул.

Радиус шара a и масса m в редуцированную динамику не входят:
координаты уже отнесены к a, масса сокращается и остаётся только в k.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.core.config import settings
from src.mechanics.errors import NumericError, PreconditionError, VertexSingularityError
from src.mechanics.profile import Profile


@dataclass(frozen=True)
class SystemParams:
    """
    Физические константы: k — коэффициент инерции (I = m·k·a²),
    g_hat — приведённое ускорение свободного падения,
    Omega — угловая скорость поверхности, alpha — наклон оси (рад).
    """
    k: float = 0.4
    g_hat: float = 1.0
    Omega: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.k < 1.0:
            raise ValueError("k must lie in (0,1)")
        if not self.g_hat > 0.0:
            raise ValueError("g_hat must be positive")
        if not 0.0 <= self.alpha < 0.5 * math.pi:
            raise ValueError("alpha must lie in [0, pi/2)")
        if not math.isfinite(self.Omega):
            raise ValueError("Omega must be finite")

    @property
    def gamma(self) -> float:
        return self.g_hat / (1.0 + self.k)

    @property
    def mu(self) -> float:
        return self.k / (1.0 + self.k)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "g_hat": self.g_hat,
            "Omega": self.Omega,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "mu": self.mu,
        }


@dataclass(frozen=True)
class ReducedState:
    x: tuple[float, float]
    v: tuple[float, float] = (0.0, 0.0)
    omega_z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x[0], self.x[1], self.v[0], self.v[1], self.omega_z])

    @classmethod
    def from_array(cls, y) -> "ReducedState":
        return cls(
            x=(float(y[0]), float(y[1])),
            v=(float(y[2]), float(y[3])),
            omega_z=float(y[4]),
        )

    @property
    def radius(self) -> float:
        return math.hypot(self.x[0], self.x[1])

    def to_dict(self) -> dict:
        return {"x": list(self.x), "v": list(self.v), "omega_z": self.omega_z}


@dataclass(frozen=True)
class FullState:
    """Редуцированное состояние плюс ориентация шара R ∈ SO(3)"""
    reduced: ReducedState
    R: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.shape != (3, 3):
            raise PreconditionError("Attitude must be a 3x3 matrix")
        if np.linalg.norm(R.T @ R - np.eye(3)) > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise PreconditionError("Attitude is not a rotation matrix")

    def attitude(self) -> np.ndarray:
        return np.asarray(self.R, dtype=float)


@dataclass(frozen=True)
class StateDerivative:
    dx: tuple[float, float]
    dv: tuple[float, float]
    domega_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx[0], self.dx[1], self.dv[0], self.dv[1], self.domega_z])


def _check_finite(**terms: float) -> None:
    for name, value in terms.items():
        if not math.isfinite(value):
            raise NumericError(name, value)


def field_rhs(p: SystemParams, s: Profile, y) -> list[float]:
    """
    Правая часть редуцированной системы на плоском векторе
    y = (x₁, x₂, v₁, v₂, ω_z). Горячий путь интегратора.
    """
    x1, x2, v1, v2, wz = y[0], y[1], y[2], y[3], y[4]
    rho2 = x1 * x1 + x2 * x2
    _, ps1, ps2 = s.psi_jet(0.5 * rho2)

    k = p.k
    gam = p.g_hat / (1.0 + k)
    mu = k / (1.0 + k)
    Om = p.Omega
    S = math.sin(p.alpha)
    c = math.cos(p.alpha)

    F2 = 1.0 + rho2 * ps1 * ps1
    F = math.sqrt(F2)
    sigma = ps1 + rho2 * ps2
    pp = x1 * v1 + x2 * v2
    qq = x1 * v2 - x2 * v1
    kappa = (v1 * v1 + v2 * v2) * ps1 + pp * pp * ps2
    G = F + ps1
    H = ps1 * ps1 + rho2 * ps1 * ps2 + F * ps2
    ik = 1.0 / (1.0 + k)

    num1 = (
        gam * (x1 * ps1 * c + (1.0 + x2 * x2 * ps1 * ps1) * S)
        - mu * (v2 * ps1 + x2 * pp * ps2) * wz * F
        + mu * v1 * pp * sigma * ps1
        + x1 * kappa * ps1 * ik
        + Om * mu * (v2 * F * G + x2 * pp * H)
    )
    num2 = (
        gam * x2 * ps1 * (c - x1 * ps1 * S)
        + mu * (v1 * ps1 + x1 * pp * ps2) * wz * F
        + mu * v2 * pp * sigma * ps1
        + x2 * kappa * ps1 * ik
        - Om * mu * (v1 * F * G + x1 * pp * H)
    )
    dv1 = -num1 / F2
    dv2 = -num2 / F2
    dwz = (
        -(gam / F) * x2 * ps1 * S
        - (pp * ps1 * ik / (F2 * F))
        * ((wz * F + qq * ps1) * sigma - Om * (F2 + (F + rho2 * ps1) * sigma))
    )

    if not (math.isfinite(dv1) and math.isfinite(dv2) and math.isfinite(dwz)):
        _check_finite(psi1=ps1, psi2=ps2, F=F, sigma=sigma, kappa=kappa,
                      dv1=dv1, dv2=dv2, domega_z=dwz)
    return [v1, v2, dv1, dv2, dwz]


def reduced_vector_field(p: SystemParams, s: Profile, st: ReducedState) -> StateDerivative:
    d = field_rhs(p, s, st.as_array().tolist())
    return StateDerivative(dx=(d[0], d[1]), dv=(d[2], d[3]), domega_z=d[4])


def _omega_xy(p: SystemParams, s: Profile, x1, x2, v1, v2, wz) -> tuple[float, float]:
    rho2 = x1 * x1 + x2 * x2
    _, ps1, _ = s.psi_jet(0.5 * rho2)
    F = math.sqrt(1.0 + rho2 * ps1 * ps1)
    Om = p.Omega
    wx = -F * v2 - x1 * ps1 * wz + Om * x1 * (F + ps1)
    wy = F * v1 - x2 * ps1 * wz + Om * x2 * (F + ps1)
    return wx, wy


def constraint_omega(p: SystemParams, s: Profile, st: ReducedState) -> tuple[float, float]:
    """ω_x, ω_y из первых двух компонент условия качения"""
    return _omega_xy(p, s, st.x[0], st.x[1], st.v[0], st.v[1], st.omega_z)


def constraint_residual(p: SystemParams, s: Profile, st: ReducedState) -> np.ndarray:
    """
    Невязка условия V_C + ω × CP − Ωe_z × OP (все три компоненты),
    с ω_x, ω_y из constraint_omega. В единицах радиуса шара.
    """
    x1, x2 = st.x
    v1, v2 = st.v
    rho2 = x1 * x1 + x2 * x2
    psi, ps1, _ = s.psi_jet(0.5 * rho2)
    F = math.sqrt(1.0 + rho2 * ps1 * ps1)
    wx, wy = constraint_omega(p, s, st)

    omega = np.array([wx, wy, st.omega_z])
    n = np.array([x1 * ps1 / F, x2 * ps1 / F, -1.0 / F])
    v_c = np.array([v1, v2, (x1 * v1 + x2 * v2) * ps1])
    op = np.array([x1, x2, psi]) + n
    surface_velocity = p.Omega * np.array([-op[1], op[0], 0.0])
    return v_c + np.cross(omega, n) - surface_velocity


def constraint_residual_z(p: SystemParams, s: Profile, st: ReducedState) -> float:
    return float(constraint_residual(p, s, st)[2])


def vector_field_fform(p: SystemParams, s: Profile, st: ReducedState) -> StateDerivative:
    """
    Уравнения движения через f, f′, f″ и J = ((0,1),(−1,0)).
    Сингулярны в вершине: при |x| < 1e−8 вычисление отклоняется.
    """
    x1, x2 = st.x
    v1, v2 = st.v
    wz = st.omega_z
    r = math.hypot(x1, x2)
    if r < settings.vertex_singularity_radius:
        raise VertexSingularityError(f"f-form undefined at |x|={r!r} (vertex)")

    jet = s.f_jet(r)
    f1, f2 = jet.f1, jet.f2
    F2 = 1.0 + f1 * f1
    F = math.sqrt(F2)

    k = p.k
    gam = p.gamma
    mu = p.mu
    Om = p.Omega
    S = math.sin(p.alpha)
    c = math.cos(p.alpha)

    xv = x1 * v1 + x2 * v2
    xJv = x1 * v2 - x2 * v1
    r2 = r * r
    r3 = r2 * r
    r4 = r2 * r2
    quad = xJv * xJv * f1 + r * xv * xv * f2

    dv1 = (
        -(gam / F2) * ((x1 / r) * f1 * c + (1.0 + (x2 * x2 / r2) * f1 * f1) * S)
        + (mu / F) * ((x1 / r3) * xJv * f1 + (x2 / r2) * xv * f2) * wz
        - (mu / F2) * (v1 / r) * xv * f1 * f2
        - (f1 / ((1.0 + k) * F2)) * (x1 / r4) * quad
        - Om * mu * (
            v2
            + (1.0 / F) * (x1 / r3) * xJv * f1
            + (x2 / r2) * (xv / F2) * f2 * (F + r * f1)
        )
    )
    dv2 = (
        -(gam / F2) * (x2 / r) * f1 * (c - (x1 / r) * f1 * S)
        + (mu / F) * ((x2 / r3) * xJv * f1 - (x1 / r2) * xv * f2) * wz
        - (mu / F2) * (v2 / r) * xv * f1 * f2
        - (f1 / ((1.0 + k) * F2)) * (x2 / r4) * quad
        + Om * mu * (
            v1
            - (1.0 / F) * (x2 / r3) * xJv * f1
            + (x1 / r2) * (xv / F2) * f2 * (F + r * f1)
        )
    )
    dwz = (
        -(gam / F) * (x2 / r) * f1 * S
        - (f1 * f2 / ((1.0 + k) * F2 * F)) * (xv / r2) * (r * F * wz + xJv * f1)
        + Om * (f1 / ((1.0 + k) * F)) * (xv / r) * (1.0 + f2 / F + r * f1 * f2 / F2)
    )
    _check_finite(dv1=dv1, dv2=dv2, domega_z=dwz)
    return StateDerivative(dx=(v1, v2), dv=(dv1, dv2), domega_z=dwz)


def hat(omega) -> np.ndarray:
    """Кососимметричная матрица: hat(ω)·u = ω × u"""
    w1, w2, w3 = float(omega[0]), float(omega[1]), float(omega[2])
    return np.array([
        [0.0, -w3, w2],
        [w3, 0.0, -w1],
        [-w2, w1, 0.0],
    ])


def attitude_rhs(omega, R) -> np.ndarray:
    """Ṙ = ω̂·R"""
    return hat(omega) @ np.asarray(R, dtype=float)


def full_rhs(p: SystemParams, s: Profile, y) -> list[float]:
    """
    Правая часть полной системы: 5 редуцированных координат
    и 9 элементов R (построчно).
    """
    d = field_rhs(p, s, y)
    wx, wy = _omega_xy(p, s, y[0], y[1], y[2], y[3], y[4])
    R = np.asarray(y[5:14], dtype=float).reshape(3, 3)
    dR = attitude_rhs((wx, wy, y[4]), R)
    return d + dR.ravel().tolist()
