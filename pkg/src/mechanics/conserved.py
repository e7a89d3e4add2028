"""
Kasamawashi — Первые интегралы
Движущаяся энергия (α = 0), её гессиан в вершине, проверка Ляпунова
и оценки, исключающие раздувание скоростей у вершины.
"""
import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from src.core.config import Verdict
from src.mechanics.dynamics import ReducedState, SystemParams
from src.mechanics.errors import (
    EmptyLevelSetError,
    NotConservedError,
    PreconditionError,
)
from src.mechanics.profile import Profile, max_abs_height

PD_TOLERANCE = 1e-12


@dataclass
class EnergyBounds:
    """Оценки |v| и |ω_z| на множестве уровня E = E0 при |x| ≤ L"""
    E0: float
    L: float
    C: float
    v_max: float
    omega_max: float

    def to_dict(self) -> dict:
        return {
            "E0": self.E0,
            "L": self.L,
            "C": self.C,
            "v_max": self.v_max,
            "omega_max": self.omega_max,
        }


def moving_energy(p: SystemParams, s: Profile, st: ReducedState) -> float:
    """
    E = ½|v|² + ½(x·v ψ′)² + (k/2)ω_z² − Ω(x₁v₂ − x₂v₁) − kΩω_z
        + (k/2)(F(v₁ + Ωx₂) + x₂(Ω − ω_z)ψ′)²
        + (k/2)(F(v₂ − Ωx₁) − x₁(Ω − ω_z)ψ′)² + ĝψ
    """
    if p.alpha != 0.0:
        raise NotConservedError(
            f"Moving energy is not a first integral for alpha={p.alpha!r}"
        )
    x1, x2 = st.x
    v1, v2 = st.v
    wz = st.omega_z
    k = p.k
    Om = p.Omega

    rho2 = x1 * x1 + x2 * x2
    psi, ps1, _ = s.psi_jet(0.5 * rho2)
    F = math.sqrt(1.0 + rho2 * ps1 * ps1)
    xv = x1 * v1 + x2 * v2

    b1 = F * (v1 + Om * x2) + x2 * (Om - wz) * ps1
    b2 = F * (v2 - Om * x1) - x1 * (Om - wz) * ps1
    return (
        0.5 * (v1 * v1 + v2 * v2)
        + 0.5 * (xv * ps1) ** 2
        + 0.5 * k * wz * wz
        - Om * (x1 * v2 - x2 * v1)
        - k * Om * wz
        + 0.5 * k * b1 * b1
        + 0.5 * k * b2 * b2
        + p.g_hat * psi
    )


def tilted_energy(p: SystemParams, s: Profile, st: ReducedState) -> float:
    """
    Механическая энергия для неподвижной наклонной поверхности (Ω = 0):
    T + ĝ(x₁ sin α + ψ cos α). При α = 0 совпадает с moving_energy.
    """
    if p.Omega != 0.0:
        raise NotConservedError(
            f"Mechanical energy is not conserved for Omega={p.Omega!r}"
        )
    x1, x2 = st.x
    v1, v2 = st.v
    wz = st.omega_z
    rho2 = x1 * x1 + x2 * x2
    psi, ps1, _ = s.psi_jet(0.5 * rho2)
    F = math.sqrt(1.0 + rho2 * ps1 * ps1)

    wx = -F * v2 - x1 * ps1 * wz
    wy = F * v1 - x2 * ps1 * wz
    xv = x1 * v1 + x2 * v2
    return (
        0.5 * (v1 * v1 + v2 * v2)
        + 0.5 * (xv * ps1) ** 2
        + 0.5 * p.k * (wx * wx + wy * wy + wz * wz)
        + p.g_hat * (x1 * math.sin(p.alpha) + psi * math.cos(p.alpha))
    )


def energy_hessian_vertex(p: SystemParams, f2_0: float) -> np.ndarray:
    """Гессиан E в точке (0, 0, 0, 0, ω_z = Ω), порядок (x₁, x₂, v₁, v₂, ω_z)"""
    k = p.k
    Om = p.Omega
    d = k * Om * Om + p.g_hat * f2_0
    m = (1.0 + k) * Om
    return np.array([
        [d, 0.0, 0.0, -m, 0.0],
        [0.0, d, m, 0.0, 0.0],
        [0.0, m, 1.0 + k, 0.0, 0.0],
        [-m, 0.0, 0.0, 1.0 + k, 0.0],
        [0.0, 0.0, 0.0, 0.0, k],
    ])


def leading_minors(M: np.ndarray) -> list[float]:
    return [float(np.linalg.det(M[:i, :i])) for i in range(1, M.shape[0] + 1)]


def is_positive_definite(M: np.ndarray) -> bool:
    """Критерий Сильвестра с допуском относительно нормы матрицы"""
    norm = max(float(np.linalg.norm(M)), 1.0)
    return all(
        minor > PD_TOLERANCE * norm ** (i + 1)
        for i, minor in enumerate(leading_minors(M))
    )


def lyapunov_vertex_check(p: SystemParams, f2_0: float) -> Verdict:
    """
    Устойчивость по Ляпунову равновесия (0, 0, 0, 0, Ω):
    Stable, если гессиан движущейся энергии положительно определён.
    Вне этой области ответ Inconclusive, неустойчивость не утверждается.
    """
    by_minors = is_positive_definite(energy_hessian_vertex(p, f2_0))
    closed_form = f2_0 > 0.0 and p.Omega * p.Omega < p.g_hat * f2_0

    if by_minors != closed_form:
        logger.warning(
            f"Lyapunov test disagreement: minors={by_minors}, "
            f"closed form={closed_form} (Omega={p.Omega!r}, f2_0={f2_0!r})"
        )
        return Verdict.INCONCLUSIVE
    return Verdict.STABLE if by_minors else Verdict.INCONCLUSIVE


def energy_bounds(p: SystemParams, s: Profile, E0: float, L: float) -> EnergyBounds:
    """
    Ограниченность |v| и |ω_z| на множестве уровня движущейся энергии
    в диске |x| ≤ L. Константа C включает множитель ĝ.
    """
    if p.alpha != 0.0:
        raise NotConservedError("Energy bounds require alpha = 0")
    if not 0.0 < L <= s.r_max:
        raise PreconditionError(f"L={L!r} must lie in (0, r_max={s.r_max!r}]")

    Om = abs(p.Omega)
    C = 0.5 * (p.k + L * L) * Om * Om + p.g_hat * max_abs_height(s, L)
    if E0 + C < 0.0:
        raise EmptyLevelSetError(E0, C)

    root = math.sqrt(2.0 * (E0 + C))
    return EnergyBounds(
        E0=E0,
        L=L,
        C=C,
        v_max=L * Om + root,
        omega_max=Om + math.sqrt(2.0 * (E0 + C) / p.k),
    )


def energy_gradient_fd(p: SystemParams, s: Profile, st: ReducedState,
                       step: float = 1e-6) -> np.ndarray:
    """Центральная конечно-разностная производная moving_energy"""
    y = st.as_array()
    grad = np.zeros(5)
    for i in range(5):
        e = np.zeros(5)
        e[i] = step
        grad[i] = (
            moving_energy(p, s, ReducedState.from_array(y + e))
            - moving_energy(p, s, ReducedState.from_array(y - e))
        ) / (2.0 * step)
    return grad


def energy_hessian_fd(p: SystemParams, s: Profile, st: ReducedState,
                      step: float = 1e-4) -> np.ndarray:
    """Центральный конечно-разностный гессиан moving_energy"""
    y = st.as_array()
    H = np.zeros((5, 5))

    def energy(z: np.ndarray) -> float:
        return moving_energy(p, s, ReducedState.from_array(z))

    for i in range(5):
        for j in range(i, 5):
            ei = np.zeros(5)
            ej = np.zeros(5)
            ei[i] = step
            ej[j] = step
            H[i, j] = (
                energy(y + ei + ej) - energy(y + ei - ej)
                - energy(y - ei + ej) + energy(y - ei - ej)
            ) / (4.0 * step * step)
            H[j, i] = H[i, j]
    return H
