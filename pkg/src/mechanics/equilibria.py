"""
Kasamawashi — Равновесия редуцированной системы
Поиск семейств (x, 0, ω_z): вершина, критические параллели (α = 0)
и точки с горизонтальной касательной плоскостью (α ≠ 0).
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy.optimize import bisect

from src.core.config import FamilyKind, settings
from src.mechanics.dynamics import ReducedState, SystemParams, field_rhs
from src.mechanics.profile import Profile


@dataclass
class EquilibriumFamily:
    """
    Семейство равновесий, параметризованное ω_z ∈ ℝ.
    CriticalParallel хранится представителем (r₀, 0);
    Segment — отрезок радиусов [r_from, r_to], на котором условие
    равновесия выполнено тождественно.
    """
    kind: FamilyKind
    position: tuple[float, float]
    radius: Optional[float] = None
    r_from: Optional[float] = None
    r_to: Optional[float] = None
    omega_z_free: bool = field(default=True)

    @property
    def x1(self) -> float:
        return self.position[0]

    def circle_points(self, n: int) -> list[tuple[float, float]]:
        """Точки окружности |x| = r₀ (для CriticalParallel)"""
        r = self.radius if self.radius is not None else math.hypot(*self.position)
        return [
            (r * math.cos(2.0 * math.pi * i / n), r * math.sin(2.0 * math.pi * i / n))
            for i in range(n)
        ]

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind.value,
            "position": list(self.position),
            "omega_z_free": self.omega_z_free,
        }
        if self.radius is not None:
            data["radius"] = self.radius
        if self.r_from is not None:
            data["r_from"] = self.r_from
            data["r_to"] = self.r_to
        return data


def scan_roots(
    g: Callable[[float], float],
    a: float,
    b: float,
    n_points: int = None,
    xtol: float = None,
    zero_tol: float = None,
) -> tuple[list[float], list[tuple[float, float]]]:
    """
    Корни g на [a, b]: смена знака на равномерной сетке с уточнением
    бисекцией. Узел с |g| ≤ zero_tol считается корнем; серия таких
    узлов возвращается как отрезок. Кратные корни без смены знака
    могут быть пропущены.
    """
    n_points = n_points or settings.equilibrium_grid_points
    xtol = xtol or settings.bisection_xtol
    zero_tol = settings.critical_zero_tol if zero_tol is None else zero_tol

    grid = np.linspace(a, b, n_points)
    values = [g(float(r)) for r in grid]
    is_zero = [abs(v) <= zero_tol for v in values]

    roots: list[float] = []
    segments: list[tuple[float, float]] = []

    i = 0
    while i < n_points:
        if is_zero[i]:
            j = i
            while j + 1 < n_points and is_zero[j + 1]:
                j += 1
            if j > i:
                segments.append((float(grid[i]), float(grid[j])))
            else:
                roots.append(float(grid[i]))
            i = j + 1
            continue
        if i + 1 < n_points and not is_zero[i + 1] and values[i] * values[i + 1] < 0.0:
            roots.append(float(bisect(g, grid[i], grid[i + 1], xtol=xtol)))
        i += 1

    return roots, segments


def find_equilibria(p: SystemParams, s: Profile,
                    xtol: Optional[float] = None) -> list[EquilibriumFamily]:
    families: list[EquilibriumFamily] = []
    r_lo, r_hi = s.r_min, s.sweep_r_max

    def f1(r: float) -> float:
        return s.f_jet(r).f1

    if p.alpha == 0.0:
        if r_lo == 0.0:
            families.append(EquilibriumFamily(FamilyKind.VERTEX, (0.0, 0.0)))

        roots, segments = scan_roots(f1, r_lo, r_hi, xtol=xtol)
        for r0 in roots:
            if r0 > 0.0:
                families.append(
                    EquilibriumFamily(FamilyKind.CRITICAL_PARALLEL, (r0, 0.0), radius=r0)
                )
        for lo, hi in segments:
            families.append(EquilibriumFamily(
                FamilyKind.SEGMENT, (0.5 * (lo + hi), 0.0), r_from=lo, r_to=hi,
            ))
    else:
        tan_a = math.tan(p.alpha)
        # x₁ > 0: f′(x₁) = −tan α;  x₁ < 0: f′(|x₁|) = +tan α
        for sign in (1.0, -1.0):
            roots, segments = scan_roots(
                lambda r: f1(r) + sign * tan_a, r_lo, r_hi, xtol=xtol
            )
            for r0 in roots:
                if r0 > 0.0:
                    families.append(
                        EquilibriumFamily(FamilyKind.TILTED_POINT, (sign * r0, 0.0))
                    )
            for lo, hi in segments:
                families.append(EquilibriumFamily(
                    FamilyKind.SEGMENT, (sign * 0.5 * (lo + hi), 0.0),
                    r_from=sign * lo, r_to=sign * hi,
                ))

        tilted = [f for f in families if f.kind == FamilyKind.TILTED_POINT]
        if len(tilted) > 1 and is_concave(s):
            logger.warning(
                f"Concave profile has {len(tilted)} tilted equilibria "
                f"(expected a unique one): {[f.x1 for f in tilted]}"
            )

    logger.debug(
        f"Equilibria for alpha={p.alpha!r}: "
        f"{[(f.kind.value, f.position) for f in families]}"
    )
    return families


def is_concave(s: Profile, n_points: int = 1001, tol: float = 1e-12) -> bool:
    """f″ ≤ 0 на сетке области определения"""
    return all(
        s.f_jet(float(r)).f2 <= tol
        for r in np.linspace(s.r_min, s.sweep_r_max, n_points)
    )


def residual(p: SystemParams, s: Profile, x, omega_z: float) -> float:
    """Евклидова норма векторного поля в точке (x, 0, ω_z)"""
    d = field_rhs(p, s, [float(x[0]), float(x[1]), 0.0, 0.0, float(omega_z)])
    return math.sqrt(sum(c * c for c in d))


def equilibrium_state(family: EquilibriumFamily, omega_z: float) -> ReducedState:
    return ReducedState(x=family.position, v=(0.0, 0.0), omega_z=omega_z)
