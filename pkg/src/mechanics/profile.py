"""
Kasamawashi — Профиль поверхности вращения
Поверхность задаётся гладкой функцией ψ, f(r) = ψ(r²/2)
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from loguru import logger

from src.core.config import ProfileKind, settings
from src.mechanics.errors import DomainError

# ψ, ψ′, ψ″ в точке u
PsiJet = tuple[float, float, float]


@dataclass(frozen=True)
class FJet:
    """Значения f, f′, f″ в точке r"""
    f: float
    f1: float
    f2: float

    def to_dict(self) -> dict:
        return {"f": self.f, "f1": self.f1, "f2": self.f2}


@dataclass(frozen=True)
class Profile:
    """
    Базовый профиль. Наследники реализуют _psi(u) и,
    если есть замкнутая форма, _fjet(r).
    """
    r_max: float = 10.0

    kind: ProfileKind = field(init=False, default=ProfileKind.FLAT)

    @property
    def r_min(self) -> float:
        return 0.0

    @property
    def smooth(self) -> bool:
        return True

    @property
    def sweep_r_max(self) -> float:
        """Конечная граница для сеточных операций"""
        if math.isinf(self.r_max):
            return settings.default_r_max
        return self.r_max

    def _check_u(self, u: float) -> None:
        u_max = 0.5 * self.r_max * self.r_max
        u_min = 0.5 * self.r_min * self.r_min
        if not (u >= u_min * (1.0 - 1e-12)) or u > u_max * (1.0 + 1e-12):
            raise DomainError(u, f"{u_min!r} <= u <= {u_max!r}")

    def _check_r(self, r: float) -> None:
        if not (r >= self.r_min * (1.0 - 1e-12)) or r > self.r_max * (1.0 + 1e-12):
            raise DomainError(r, f"{self.r_min!r} <= r <= {self.r_max!r}")

    def _psi(self, u: float) -> PsiJet:
        raise NotImplementedError

    def _fjet(self, r: float) -> Optional[FJet]:
        return None

    def psi_jet(self, u: float) -> PsiJet:
        self._check_u(u)
        return self._psi(u)

    def f_jet(self, r: float) -> FJet:
        r = abs(r)
        self._check_r(r)
        jet = self._fjet(r)
        if jet is not None:
            return jet
        psi, d1, d2 = self._psi(0.5 * r * r)
        if r == 0.0:
            return FJet(psi, 0.0, d1)
        return FJet(psi, r * d1, d1 + r * r * d2)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "r_max": self.r_max}


@dataclass(frozen=True)
class Flat(Profile):
    kind: ProfileKind = field(init=False, default=ProfileKind.FLAT)

    def _psi(self, u: float) -> PsiJet:
        return 0.0, 0.0, 0.0

    def _fjet(self, r: float) -> FJet:
        return FJet(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Paraboloid(Profile):
    """ψ(u) = c·u, f(r) = c·r²/2"""
    c: float = 0.0
    kind: ProfileKind = field(init=False, default=ProfileKind.PARABOLOID)

    def _psi(self, u: float) -> PsiJet:
        return self.c * u, self.c, 0.0

    def _fjet(self, r: float) -> FJet:
        return FJet(0.5 * self.c * r * r, self.c * r, self.c)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "c": self.c}


@dataclass(frozen=True)
class ConcaveCap(Paraboloid):
    """Колпак: ψ(u) = c·u с c < 0"""
    c: float = -0.5
    kind: ProfileKind = field(init=False, default=ProfileKind.CONCAVE_CAP)


@dataclass(frozen=True)
class Quartic(Profile):
    """ψ(u) = c2·u + c4·u²"""
    c2: float = 0.0
    c4: float = 0.0
    kind: ProfileKind = field(init=False, default=ProfileKind.QUARTIC)

    def _psi(self, u: float) -> PsiJet:
        return (
            self.c2 * u + self.c4 * u * u,
            self.c2 + 2.0 * self.c4 * u,
            2.0 * self.c4,
        )

    def _fjet(self, r: float) -> FJet:
        r2 = r * r
        return FJet(
            0.5 * self.c2 * r2 + 0.25 * self.c4 * r2 * r2,
            self.c2 * r + self.c4 * r2 * r,
            self.c2 + 3.0 * self.c4 * r2,
        )

    def to_dict(self) -> dict:
        return {**super().to_dict(), "c2": self.c2, "c4": self.c4}


@dataclass(frozen=True)
class TruncatedCone(Profile):
    """
    Конус f(r) = −s·r вне окрестности вершины r ≥ δ.
    ψ(u) = −s·√(2u), ψ′ = −s/r, ψ″ = s/r³.
    """
    slope: float = 0.0
    delta: float = 0.1
    kind: ProfileKind = field(init=False, default=ProfileKind.CONE)

    @property
    def r_min(self) -> float:
        return self.delta

    @property
    def smooth(self) -> bool:
        return False

    def _psi(self, u: float) -> PsiJet:
        r = math.sqrt(2.0 * u)
        return -self.slope * r, -self.slope / r, self.slope / (r * r * r)

    def _fjet(self, r: float) -> FJet:
        # f″ ровно ноль: конус
        return FJet(-self.slope * r, -self.slope, 0.0)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "slope": self.slope, "delta": self.delta}


@dataclass(frozen=True)
class Custom(Profile):
    """Профиль по пользовательскому вычислителю ψ-джета"""
    psi_fn: Optional[Callable[[float], PsiJet]] = None
    label: str = "custom"
    coefficients: tuple = ()
    kind: ProfileKind = field(init=False, default=ProfileKind.CUSTOM)

    def _psi(self, u: float) -> PsiJet:
        return self.psi_fn(u)

    def to_dict(self) -> dict:
        data = {**super().to_dict(), "label": self.label}
        if self.coefficients:
            data["psi"] = list(self.coefficients)
        return data


def polynomial_profile(
    coefficients: list[float], r_max: float = 10.0, label: str = "custom",
) -> Custom:
    """
    Custom-профиль с полиномиальной ψ(u) = Σ cᵢ·uⁱ.
    Требует c0 = 0 (вершина в начале координат).
    """
    poly = np.polynomial.Polynomial(coefficients)
    d1 = poly.deriv(1)
    d2 = poly.deriv(2)

    def psi_fn(u: float) -> PsiJet:
        return float(poly(u)), float(d1(u)), float(d2(u))

    return Custom(
        r_max=r_max, psi_fn=psi_fn, label=label,
        coefficients=tuple(float(c) for c in coefficients),
    )


# === Операции модуля ===

def psi_jet(p: Profile, u: float) -> PsiJet:
    return p.psi_jet(u)


def f_jet(p: Profile, r: float) -> FJet:
    return p.f_jet(r)


def metric_factor(p: Profile, r: float) -> float:
    """F(r) = √(1 + f′(r)²)"""
    f1 = p.f_jet(r).f1
    return math.sqrt(1.0 + f1 * f1)


def regularity_check(p: Profile, n_samples: int = None) -> list[float]:
    """
    Проверка условия f″ > −(1 + f′²)^{3/2} на равномерной сетке.
    Возвращает радиусы нарушений; пустой список — профиль допустим.
    Проверка сеточная и для Custom не является исчерпывающей.
    """
    n_samples = n_samples or settings.regularity_samples
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")

    violations = []
    for r in np.linspace(p.r_min, p.sweep_r_max, n_samples):
        jet = p.f_jet(float(r))
        if not jet.f2 > -((1.0 + jet.f1 * jet.f1) ** 1.5):
            violations.append(float(r))

    if violations:
        logger.debug(
            f"Regularity violated at {len(violations)} of {n_samples} "
            f"samples (first r={violations[0]:.6g})"
        )
    return violations


def normal_vector(p: Profile, x) -> np.ndarray:
    """Нисходящая единичная нормаль n(x) = (x₁ψ′, x₂ψ′, −1)/F"""
    x1, x2 = float(x[0]), float(x[1])
    rho2 = x1 * x1 + x2 * x2
    p._check_r(math.sqrt(rho2))
    if rho2 == 0.0:
        return np.array([0.0, 0.0, -1.0])
    _, s, _ = p._psi(0.5 * rho2)
    F = math.sqrt(1.0 + rho2 * s * s)
    return np.array([x1 * s / F, x2 * s / F, -1.0 / F])


def max_abs_height(p: Profile, L: float, n_points: int = None) -> float:
    """max |f(r)| на равномерной сетке [r_min, L]"""
    n_points = n_points or settings.bound_grid_points
    return max(
        abs(p.f_jet(float(r)).f)
        for r in np.linspace(p.r_min, L, n_points)
    )
