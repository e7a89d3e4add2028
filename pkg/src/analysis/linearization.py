"""
Kasamawashi — Линеаризация в равновесиях
Аналитический блок 4×4, биквадратный характеристический многочлен,
классификация типов собственных значений, спектр в вершине и условия
спектральной устойчивости наклонного равновесия.
"""
import cmath
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from loguru import logger

from src.core.config import EigenType, settings
from src.mechanics.conserved import lyapunov_vertex_check
from src.mechanics.dynamics import ReducedState, SystemParams, field_rhs
from src.mechanics.equilibria import is_concave, residual
from src.mechanics.errors import PreconditionError
from src.mechanics.profile import Profile

# Порядок меток в строке типа: ZZCC, R+R-CC, F+F+F-F-
_LABEL_ORDER = {
    EigenType.Z: 0,
    EigenType.R_PLUS: 1,
    EigenType.R_MINUS: 2,
    EigenType.F_PLUS: 3,
    EigenType.F_MINUS: 4,
    EigenType.C: 5,
}
_DISC_SNAP = 8.0 * 2.220446049250313e-16


@dataclass(frozen=True)
class Block4:
    """Ненулевые элементы блока ((0,0,1,0),(0,0,0,1),(a31,0,0,a34),(0,a42,a43,0))"""
    a31: float
    a34: float
    a42: float
    a43: float

    def matrix(self) -> np.ndarray:
        return np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [self.a31, 0.0, 0.0, self.a34],
            [0.0, self.a42, self.a43, 0.0],
        ])

    def to_dict(self) -> dict:
        return {"a31": self.a31, "a34": self.a34, "a42": self.a42, "a43": self.a43}


@dataclass
class SpectrumType:
    labels: list[EigenType]
    eigenvalues: list[complex]
    b: float = 0.0
    c: float = 0.0
    outside_table: bool = False

    @property
    def type_string(self) -> str:
        return "".join(label.value for label in self.labels)

    @property
    def spectrally_stable(self) -> bool:
        return all(label in (EigenType.Z, EigenType.C) for label in self.labels)

    def multiset(self) -> Counter:
        return Counter(self.labels)

    def to_dict(self) -> dict:
        return {
            "type": self.type_string,
            "b": self.b,
            "c": self.c,
            "roots": [[z.real, z.imag] for z in self.eigenvalues],
            "spectrally_stable": self.spectrally_stable,
            "outside_case_table": self.outside_table,
        }


def classify_root(z: complex, eps: float) -> EigenType:
    re_zero = abs(z.real) < eps
    im_zero = abs(z.imag) < eps
    if re_zero and im_zero:
        return EigenType.Z
    if re_zero:
        return EigenType.C
    if im_zero:
        return EigenType.R_PLUS if z.real > 0.0 else EigenType.R_MINUS
    return EigenType.F_PLUS if z.real > 0.0 else EigenType.F_MINUS


def biquadratic_roots(b: float, c: float) -> list[complex]:
    """Корни λ⁴ + 2bλ² + c в замкнутой форме (λ² = −b ± √(b² − c))"""
    disc = b * b - c
    if abs(disc) <= _DISC_SNAP * max(b * b, abs(c)):
        disc = 0.0

    if disc >= 0.0:
        sq = math.sqrt(disc)
        z1 = -(b + math.copysign(sq, b)) if b != 0.0 else -sq
        z2 = c / z1 if z1 != 0.0 else 0.0
        squares = [complex(z1), complex(z2)]
    else:
        sq = math.sqrt(-disc)
        squares = [complex(-b, sq), complex(-b, -sq)]

    roots = []
    for z in squares:
        w = cmath.sqrt(z)
        roots.extend([w, -w])
    return roots


def classify_biquadratic(b: float, c: float, eps: Optional[float] = None) -> SpectrumType:
    """
    Типы четырёх корней λ⁴ + 2bλ² + c. Вещественная (мнимая) часть
    считается нулевой при модуле меньше eps = 1e−9·max(1, |b|, √|c|).
    Случай c < 0 (R+R-CC) вне таблицы для вершины и помечается.
    """
    if eps is None:
        eps = settings.classification_eps * max(1.0, abs(b), math.sqrt(abs(c)))
    roots = biquadratic_roots(b, c)
    labels = sorted((classify_root(z, eps) for z in roots), key=_LABEL_ORDER.get)

    outside = Counter(labels) == Counter(
        [EigenType.R_PLUS, EigenType.R_MINUS, EigenType.C, EigenType.C]
    )
    if outside:
        logger.warning(f"Spectrum R+R-CC (b={b!r}, c={c!r}) lies outside the vertex case table")
    return SpectrumType(labels=labels, eigenvalues=roots, b=b, c=c, outside_table=outside)


def biquadratic_coeffs(b4: Block4) -> tuple[float, float]:
    """λ⁴ + 2bλ² + c: 2b = −(a31 + a42 + a34·a43), c = a31·a42"""
    b = -0.5 * (b4.a31 + b4.a42 + b4.a34 * b4.a43)
    return b, b4.a31 * b4.a42


def bc_spectrally_stable(b: float, c: float) -> bool:
    """Все корни с неположительной вещественной частью: c ≥ 0 и b ≥ √c"""
    if c < 0.0:
        return False
    return b >= math.sqrt(c)


def B_function(p: SystemParams, f2_0: float, omega_z: float) -> float:
    return (1.0 + f2_0) * p.Omega - f2_0 * omega_z


def vertex_spectrum(p: SystemParams, f2_0: float, omega_z: float) -> SpectrumType:
    if p.alpha != 0.0:
        raise PreconditionError("vertex_spectrum requires alpha = 0")
    B = B_function(p, f2_0, omega_z)
    b = p.gamma * f2_0 + 0.5 * p.mu * p.mu * B * B
    c = (p.gamma * f2_0) ** 2
    return classify_biquadratic(b, c)


def vertex_report(p: SystemParams, f2_0: float, omega_z: float) -> dict:
    """Спектральная картина в вершине и, при ω_z = Ω, вердикт Ляпунова"""
    spectrum = vertex_spectrum(p, f2_0, omega_z)
    report = {
        "B": B_function(p, f2_0, omega_z),
        **spectrum.to_dict(),
    }
    if omega_z == p.Omega:
        report["lyapunov"] = lyapunov_vertex_check(p, f2_0).value
    return report


def jacobian_fd(p: SystemParams, s: Profile, st: ReducedState,
                step: Optional[float] = None) -> np.ndarray:
    """Центральные разности, шаг h·max(1, |y_i|)"""
    step = step or settings.fd_step
    y = st.as_array()
    J = np.zeros((5, 5))
    for i in range(5):
        h = step * max(1.0, abs(y[i]))
        yp = y.copy()
        ym = y.copy()
        yp[i] += h
        ym[i] -= h
        J[:, i] = (
            np.asarray(field_rhs(p, s, yp.tolist())) - np.asarray(field_rhs(p, s, ym.tolist()))
        ) / (2.0 * h)
    return J


def block4_analytic(p: SystemParams, s: Profile, x1: float, omega_z: float) -> Block4:
    res = residual(p, s, (x1, 0.0), omega_z)
    if res >= 1e-8:
        raise PreconditionError(f"({x1!r}, 0) is not an equilibrium (residual {res:.3e})")

    _, d1, d2 = s.psi_jet(0.5 * x1 * x1)
    sigma = s.f_jet(x1).f2
    F2 = 1.0 + x1 * x1 * d1 * d1
    F = math.sqrt(F2)
    S = math.sin(p.alpha)
    c = math.cos(p.alpha)
    gam, mu, Om = p.gamma, p.mu, p.Omega
    x1sq = x1 * x1

    return Block4(
        a31=(gam / (F2 * F2)) * sigma * (2.0 * x1 * d1 * S + (x1sq * d1 * d1 - 1.0) * c),
        a34=(mu / F) * d1 * omega_z - Om * (mu / F2) * (1.0 + F * d1 + x1sq * d1 * d1),
        a42=(gam / F2) * d1 * (x1 * d1 * S - c),
        a43=(
            -(mu / F) * sigma * omega_z
            + Om * (mu / F2) * (F2 + (x1sq * d1 + F) * d1 + x1sq * (F + x1sq * d1) * d2)
        ),
    )


def block_eigenvector(b4: Block4, lam: complex) -> np.ndarray:
    """
    Собственный вектор (x, λx) блока: из первой строки x = (a34·λ, λ² − a31),
    из второй x = (λ² − a42, a43·λ). Если оба вырождены, собственное
    подпространство двумерно и берётся x = (1, 0).
    """
    cand1 = np.array([b4.a34 * lam, lam * lam - b4.a31], dtype=complex)
    cand2 = np.array([lam * lam - b4.a42, b4.a43 * lam], dtype=complex)
    x = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
    if np.linalg.norm(x) < 1e-12 * max(1.0, abs(lam) ** 2):
        x = np.array([1.0, 0.0], dtype=complex)
    vec = np.concatenate([x, lam * x])
    return vec / np.linalg.norm(vec)


@dataclass
class TiltedStability:
    stable: bool
    lhs_minus_rhs: float
    bc_stable: bool
    b: float
    c: float
    coefficients: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stable": self.stable,
            "lhs_minus_rhs": self.lhs_minus_rhs,
            "bc_stable": self.bc_stable,
            "b": self.b,
            "c": self.c,
            **self.coefficients,
        }


def tilted_coefficients(p: SystemParams, s: Profile, x1: float) -> dict:
    """
    Коэффициенты условия a11Ω² + 2a12Ωω_z + a22ω_z² ≥ a0 при f″(x₁) < 0,
    h = −f″(x₁)·cos α / sin α.
    """
    S = math.sin(p.alpha)
    c = math.cos(p.alpha)
    f2 = s.f_jet(x1).f2
    h = -f2 * c / S
    ratio = p.gamma / (p.mu * p.mu)
    return {
        "h": h,
        "a11": (x1 - S) * (1.0 - h * S + h * x1 * S * S),
        "a12": 0.5 * S * (1.0 - 2.0 * h * S + h * x1 + h * x1 * S * S),
        "a22": h * S * S,
        "a0": ratio * S * (1.0 + 2.0 * c * math.sqrt(h * x1) + h * x1 * c * c),
    }


def _check_tilted(p: SystemParams, s: Profile, x1: float) -> None:
    if not 0.0 < p.alpha < 0.5 * math.pi:
        raise PreconditionError("tilted stability requires 0 < alpha < pi/2")
    if not x1 > 0.0:
        raise PreconditionError(f"x1={x1!r} must be positive")
    if not is_concave(s):
        raise PreconditionError("tilted stability requires f'' <= 0 on the domain")
    gap = abs(s.f_jet(x1).f1 + math.tan(p.alpha))
    if gap >= 1e-8:
        raise PreconditionError(f"x1={x1!r} is not a tilted equilibrium (|f'+tan a|={gap:.3e})")


def tilted_slack(p: SystemParams, s: Profile, x1: float, omega_z: float,
                 coefficients: Optional[dict] = None) -> float:
    """Левая часть минус правая в условии устойчивости (без проверок)"""
    Om = p.Omega
    if abs(s.f_jet(x1).f2) <= 1e-12:
        S = math.sin(p.alpha)
        return (x1 / S - 1.0) * Om * Om + Om * omega_z - p.gamma / (p.mu * p.mu)
    co = coefficients or tilted_coefficients(p, s, x1)
    return (
        co["a11"] * Om * Om
        + 2.0 * co["a12"] * Om * omega_z
        + co["a22"] * omega_z * omega_z
        - co["a0"]
    )


def tilted_stability(p: SystemParams, s: Profile, x1: float, omega_z: float) -> TiltedStability:
    """
    Спектральная устойчивость равновесия (x₁, 0, 0, 0, ω_z) на вогнутом
    профиле. Замкнутая форма и путь через (b, c) вычисляются оба;
    знак lhs_minus_rhs значим, масштаб у двух ветвей разный.
    """
    _check_tilted(p, s, x1)
    return evaluate_tilted(p, s, x1, omega_z)


def evaluate_tilted(p: SystemParams, s: Profile, x1: float, omega_z: float) -> TiltedStability:
    """Обе ветви проверки без предусловий (для развёрток)"""
    coefficients = {} if abs(s.f_jet(x1).f2) <= 1e-12 else tilted_coefficients(p, s, x1)
    slack = tilted_slack(p, s, x1, omega_z, coefficients or None)

    b, c = biquadratic_coeffs(block4_analytic(p, s, x1, omega_z))
    bc_stable = bc_spectrally_stable(b, c)
    stable = slack >= 0.0
    if stable != bc_stable and abs(slack) >= 1e-9:
        logger.warning(
            f"Tilted stability routes disagree at x1={x1!r}, omega_z={omega_z!r}, "
            f"Omega={p.Omega!r}: slack={slack!r}, b={b!r}, c={c!r}"
        )
    return TiltedStability(stable, slack, bc_stable, b, c, coefficients)


def tilted_omega_threshold(p: SystemParams, s: Profile, x1: float) -> Optional[float]:
    """
    Порог |ω_z| при Ω = 0 для f″(x₁) < 0:
    ω_z² ≥ (γ/μ²)(1/h + 2cos α·√(x₁/h) + x₁cos²α)/sin α.
    None для f″(x₁) = 0 (при Ω = 0 устойчивости нет).
    """
    _check_tilted(p, s, x1)
    f2 = s.f_jet(x1).f2
    if abs(f2) <= 1e-12:
        return None
    S = math.sin(p.alpha)
    c = math.cos(p.alpha)
    h = -f2 * c / S
    value = (p.gamma / (p.mu * p.mu)) * (1.0 / h + 2.0 * c * math.sqrt(x1 / h) + x1 * c * c) / S
    return math.sqrt(value)
