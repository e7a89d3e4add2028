"""
Kasamawashi — Атласы устойчивости
Развёртки по плоскости (ω_z, Ω): типы спектра в вершине, область
устойчивости наклонного равновесия, граничные точки и асимптоты,
а также пробы движений, асимптотических к вершине.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from src.core.config import ProbeDirection, Verdict, settings
from src.core.task_queue import run_jobs
from src.analysis.linearization import (
    B_function,
    biquadratic_coeffs,
    biquadratic_roots,
    block4_analytic,
    block_eigenvector,
    evaluate_tilted,
    tilted_omega_threshold,
    tilted_slack,
    tilted_stability,
    vertex_spectrum,
)
from src.mechanics.dynamics import ReducedState, SystemParams
from src.mechanics.errors import PreconditionError
from src.mechanics.integrator import IntegratorConfig, Trajectory, integrate_reduced
from src.mechanics.profile import Profile

BOUNDARY_XTOL = 1e-12

Cell = Union[str, bool]


@dataclass(frozen=True)
class GridAxis:
    """Узлы linspace(min, max, n) — центры ячеек"""
    min: float
    max: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid axis needs n >= 2")
        if not self.max > self.min:
            raise ValueError("grid axis needs max > min")

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.min, self.max, self.n)]

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "n": self.n}


DEFAULT_AXIS = GridAxis(-12.0, 12.0, 201)


@dataclass
class SweepGrid:
    """
    cells[i][j] — ячейка (ω_z = omega_z_axis[j], Ω = Omega_axis[i]):
    строка типа спектра для вершины или bool для наклонного равновесия.
    """
    omega_z_axis: GridAxis
    Omega_axis: GridAxis
    cells: list[list[Cell]]
    kind: str = "vertex"
    summary: dict = field(default_factory=dict)

    def iter_cells(self):
        omegas = self.omega_z_axis.values()
        for Om, row in zip(self.Omega_axis.values(), self.cells):
            for wz, cell in zip(omegas, row):
                yield wz, Om, cell

    def column(self, omega_z_index: int) -> list[Cell]:
        return [row[omega_z_index] for row in self.cells]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "omega_z_range": self.omega_z_axis.to_dict(),
            "Omega_range": self.Omega_axis.to_dict(),
            "summary": self.summary,
        }


# === Вершина ===

def _check_vertex_params(p: SystemParams) -> None:
    if p.alpha != 0.0:
        raise PreconditionError("vertex sweeps require alpha = 0")


def _vertex_row(p: SystemParams, f2_0: float, Om: float, omegas: list[float]) -> list[str]:
    row_params = replace(p, Omega=Om)
    return [vertex_spectrum(row_params, f2_0, wz).type_string for wz in omegas]


def sweep_vertex(
    p: SystemParams,
    f2_0: float,
    omega_z_axis: GridAxis = DEFAULT_AXIS,
    Omega_axis: GridAxis = DEFAULT_AXIS,
    threads: Optional[int] = None,
) -> SweepGrid:
    _check_vertex_params(p)
    omegas = omega_z_axis.values()
    jobs = [
        (f"vertex-row-{i}", _vertex_row, (p, f2_0, Om, omegas))
        for i, Om in enumerate(Omega_axis.values())
    ]
    cells = run_jobs(jobs, threads)

    counts: dict[str, int] = {}
    for row in cells:
        for label in row:
            counts[label] = counts.get(label, 0) + 1
    summary = {"f2_0": f2_0, "counts": dict(sorted(counts.items()))}
    if f2_0 < 0.0 and abs(f2_0) < 1.0:
        p_point, q_point = marked_points(p, f2_0)
        summary["p"] = list(p_point)
        summary["q"] = list(q_point)

    logger.info(
        f"Vertex sweep {Omega_axis.n}x{omega_z_axis.n} for f''(0)={f2_0!r}: {summary['counts']}"
    )
    return SweepGrid(omega_z_axis, Omega_axis, cells, kind="vertex", summary=summary)


def marked_points(p: SystemParams, f2_0: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """
    Пересечения границы области CCCC с осями:
    p = ((2/μ)√(γ/|f″(0)|), 0), q = (0, 2√(γ|f″(0)|)/(μ(1 − |f″(0)|))).
    """
    _check_vertex_params(p)
    if not (f2_0 < 0.0 and abs(f2_0) < 1.0):
        raise PreconditionError(f"marked points need -1 < f''(0) < 0, got {f2_0!r}")
    a = abs(f2_0)
    p_point = ((2.0 / p.mu) * math.sqrt(p.gamma / a), 0.0)
    q_point = (0.0, 2.0 * math.sqrt(p.gamma * a) / (p.mu * (1.0 - a)))
    return p_point, q_point


def instability_half_width(p: SystemParams, f2_0: float) -> float:
    """Полуширина полосы |B| < 2μ⁻¹√(γ|f″(0)|)"""
    return 2.0 * math.sqrt(p.gamma * abs(f2_0)) / p.mu


def boundary_bisection(
    p: SystemParams,
    f2_0: float,
    origin: tuple[float, float],
    direction: tuple[float, float],
    t_lo: float,
    t_hi: float,
    xtol: float = BOUNDARY_XTOL,
) -> float:
    """
    Параметр t ∈ [t_lo, t_hi] на луче origin + t·direction, где тип
    спектра переходит в тип точки t_hi.
    """
    _check_vertex_params(p)

    def label(t: float) -> str:
        wz = origin[0] + t * direction[0]
        Om = origin[1] + t * direction[1]
        return vertex_spectrum(replace(p, Omega=Om), f2_0, wz).type_string

    target = label(t_hi)
    if label(t_lo) == target:
        raise PreconditionError(f"no type transition on the ray between t={t_lo!r} and t={t_hi!r}")
    while t_hi - t_lo > xtol:
        t_mid = 0.5 * (t_lo + t_hi)
        if label(t_mid) == target:
            t_hi = t_mid
        else:
            t_lo = t_mid
    return 0.5 * (t_lo + t_hi)


@dataclass
class StabilizationScan:
    omega_z: float
    Omega_star: float
    Omega_plus: float
    Omega_minus: float
    predicted_plus: float
    predicted_minus: float

    def to_dict(self) -> dict:
        return {
            "omega_z": self.omega_z,
            "Omega_star": self.Omega_star,
            "Omega_plus": self.Omega_plus,
            "Omega_minus": self.Omega_minus,
            "predicted_plus": self.predicted_plus,
            "predicted_minus": self.predicted_minus,
        }


def stabilization_scan(
    p: SystemParams,
    f2_0: float,
    omega_z: float,
    Omega_max: float = 50.0,
    n_points: int = 2001,
) -> StabilizationScan:
    """
    Наименьшее Ω* такое, что при |Ω| > Ω* спектр в вершине CCCC.
    Сканирование по Ω ∈ [−Ω_max, Ω_max], последний переход уточняется
    бисекцией с каждой стороны.
    """
    _check_vertex_params(p)
    if not (f2_0 < 0.0 and abs(f2_0) < 1.0):
        raise PreconditionError(f"stabilization needs -1 < f''(0) < 0, got {f2_0!r}")

    def is_cccc(Om: float) -> bool:
        return vertex_spectrum(replace(p, Omega=Om), f2_0, omega_z).type_string == "CCCC"

    edges = []
    for sign in (1.0, -1.0):
        grid = np.linspace(0.0, sign * Omega_max, n_points)
        flags = [is_cccc(float(Om)) for Om in grid]
        if not flags[-1]:
            raise PreconditionError(f"|Omega| = {Omega_max!r} still not CCCC at omega_z={omega_z!r}")
        last_bad = max((i for i, ok in enumerate(flags) if not ok), default=None)
        if last_bad is None:
            edges.append(0.0)
            continue
        t = boundary_bisection(
            p, f2_0, (omega_z, 0.0), (0.0, sign),
            abs(float(grid[last_bad])), abs(float(grid[last_bad + 1])),
        )
        edges.append(sign * t)

    half = instability_half_width(p, f2_0)
    shift = f2_0 * omega_z
    return StabilizationScan(
        omega_z=omega_z,
        Omega_star=max(abs(edges[0]), abs(edges[1])),
        Omega_plus=edges[0],
        Omega_minus=edges[1],
        predicted_plus=(shift + half) / (1.0 + f2_0),
        predicted_minus=(shift - half) / (1.0 + f2_0),
    )


# === Наклонное равновесие ===

def _tilted_row(p: SystemParams, s: Profile, x1: float, Om: float,
                omegas: list[float]) -> list[bool]:
    row_params = replace(p, Omega=Om)
    return [evaluate_tilted(row_params, s, x1, wz).stable for wz in omegas]


@dataclass
class AsymptoteFit:
    """Подгонка ветвей границы на больших |ω_z|"""
    far_slope: float
    expected_slope: float
    axis_slope: float
    axis_offset_max: float

    @property
    def slope_error(self) -> float:
        return abs(self.far_slope - self.expected_slope)

    def to_dict(self) -> dict:
        return {
            "far_slope": self.far_slope,
            "expected_slope": self.expected_slope,
            "slope_error": self.slope_error,
            "axis_slope": self.axis_slope,
            "axis_offset_max": self.axis_offset_max,
        }


def _bracket_root(g, start: float, step: float, limit: float = 1e300) -> float:
    """Корень g, ближайший к start в направлении step; g(start) < 0"""
    lo = start
    hi = start + step
    while g(hi) < 0.0:
        lo = hi
        step *= 2.0
        hi = start + step
        if abs(hi) > limit:
            raise PreconditionError("no sign change found while bracketing")
    return brentq(g, lo, hi, xtol=1e-12, rtol=4.0 * np.finfo(float).eps)


def boundary_Omega_roots(p: SystemParams, s: Profile, x1: float,
                         omega_z: float) -> tuple[float, float]:
    """Граница области устойчивости по Ω при фиксированном ω_z: (Ω₋, Ω₊)"""

    def g(Om: float) -> float:
        return tilted_slack(replace(p, Omega=Om), s, x1, omega_z)

    if g(0.0) >= 0.0:
        raise PreconditionError(f"omega_z={omega_z!r} is stable at Omega=0, no bracket")
    return _bracket_root(g, 0.0, -1.0), _bracket_root(g, 0.0, 1.0)


def asymptote_fit(
    p: SystemParams,
    s: Profile,
    x1: float,
    omega_range: tuple[float, float] = (1e5, 1e7),
    n_points: int = 9,
) -> AsymptoteFit:
    """
    Для f″(x₁) = 0: дальняя ветвь границы приближается к прямой
    Ω = sin α/(sin α − x₁)·ω_z, ближняя к оси ω_z.
    """
    tilted_stability(p, s, x1, 0.0)
    if abs(s.f_jet(x1).f2) > 1e-12:
        raise PreconditionError("asymptote fit applies to f''(x1) = 0")

    omegas = np.geomspace(omega_range[0], omega_range[1], n_points)
    far, near = [], []
    for wz in omegas:
        lo, hi = boundary_Omega_roots(p, s, x1, float(wz))
        if abs(lo) >= abs(hi):
            far.append(lo)
            near.append(hi)
        else:
            far.append(hi)
            near.append(lo)

    S = math.sin(p.alpha)
    fit = AsymptoteFit(
        far_slope=float(np.polyfit(omegas, far, 1)[0]),
        expected_slope=S / (S - x1),
        axis_slope=float(np.polyfit(omegas, near, 1)[0]),
        axis_offset_max=float(max(abs(v) for v in near)),
    )
    logger.debug(f"Asymptote fit at x1={x1!r}: {fit.to_dict()}")
    return fit


def tilted_axis_intercepts(p: SystemParams, s: Profile, x1: float) -> Optional[tuple[float, float]]:
    """Точки границы на оси Ω = 0 при f″(x₁) < 0: ±ω_z*"""
    threshold = tilted_omega_threshold(replace(p, Omega=0.0), s, x1)
    if threshold is None:
        return None
    return -threshold, threshold


def sweep_tilted(
    p: SystemParams,
    s: Profile,
    x1: float,
    omega_z_axis: GridAxis = DEFAULT_AXIS,
    Omega_axis: GridAxis = DEFAULT_AXIS,
    threads: Optional[int] = None,
) -> SweepGrid:
    if p.alpha == 0.0:
        raise PreconditionError("tilted sweeps require alpha != 0")
    tilted_stability(p, s, x1, 0.0)

    omegas = omega_z_axis.values()
    jobs = [
        (f"tilted-row-{i}", _tilted_row, (p, s, x1, Om, omegas))
        for i, Om in enumerate(Omega_axis.values())
    ]
    cells = run_jobs(jobs, threads)

    stable_count = sum(cell for row in cells for cell in row)
    summary: dict = {
        "x1": x1,
        "f2_x1": s.f_jet(x1).f2,
        "stable_cells": int(stable_count),
        "total_cells": omega_z_axis.n * Omega_axis.n,
    }
    if abs(s.f_jet(x1).f2) <= 1e-12:
        summary["asymptote"] = asymptote_fit(p, s, x1).to_dict()
    else:
        intercepts = tilted_axis_intercepts(p, s, x1)
        summary["axis_intercepts"] = list(intercepts) if intercepts else None

    logger.info(
        f"Tilted sweep {Omega_axis.n}x{omega_z_axis.n} at x1={x1!r}: "
        f"{stable_count} stable cells"
    )
    return SweepGrid(omega_z_axis, Omega_axis, cells, kind="tilted", summary=summary)


# === Асимптотические движения ===

def probe_config() -> IntegratorConfig:
    return IntegratorConfig(rel_tol=1e-11, abs_tol=1e-15, t_end=100.0, dense_output_dt=0.05)


@dataclass
class ManifoldProbeResult:
    direction: tuple[float, float, float, float]
    eigenvalue: complex
    seed_offset: float
    trajectory: Trajectory
    verdict: Verdict
    sign_changes: int = 0
    min_radius: float = math.inf

    @property
    def spiraling(self) -> bool:
        return self.sign_changes >= 3

    def to_dict(self) -> dict:
        return {
            "direction": list(self.direction),
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "seed_offset": self.seed_offset,
            "verdict": self.verdict.value,
            "sign_changes": self.sign_changes,
            "spiraling": self.spiraling,
            "min_radius": self.min_radius,
            "halt_reason": self.trajectory.halt_reason.value,
            "t_final": self.trajectory.times[-1],
            "omega_z_final": self.trajectory.final.omega_z,
        }


def count_sign_changes(values: list[float]) -> int:
    changes = 0
    previous = 0.0
    for v in values:
        if v == 0.0:
            continue
        if previous != 0.0 and (v > 0.0) != (previous > 0.0):
            changes += 1
        previous = v
    return changes


def spiral_sign_changes(states: list[ReducedState], factor: float = 10.0) -> int:
    """Смены знака x₁, пока |x| уменьшается в factor раз от начального значения"""
    if not states:
        return 0
    r_stop = states[0].radius / factor
    window = []
    for st in states:
        window.append(st.x[0])
        if st.radius <= r_stop:
            break
    return count_sign_changes(window)


def manifold_probe(
    p: SystemParams,
    s: Profile,
    omega_z: float,
    which: ProbeDirection,
    seed_offset: Optional[float] = None,
    cfg: Optional[IntegratorConfig] = None,
) -> ManifoldProbeResult:
    """
    Старт в вершине со сдвигом seed_offset вдоль собственного вектора
    блока 4×4. Stable — λ с Re λ < 0, интегрирование вперёд;
    Unstable — Re λ > 0, интегрирование обращённого поля.
    """
    if p.alpha != 0.0:
        raise PreconditionError("manifold probes require alpha = 0")
    if s.r_min != 0.0:
        raise PreconditionError("profile has no vertex")
    f2_0 = s.f_jet(0.0).f2
    if not f2_0 < 0.0:
        raise PreconditionError(f"manifold probes need f''(0) < 0, got {f2_0!r}")
    spectrum = vertex_spectrum(p, f2_0, omega_z)
    if spectrum.type_string not in ("R+R+R-R-", "F+F+F-F-"):
        raise PreconditionError(
            f"(omega_z={omega_z!r}, Omega={p.Omega!r}) outside the instability strip: "
            f"{spectrum.type_string}, B={B_function(p, f2_0, omega_z)!r}"
        )

    seed_offset = seed_offset or settings.seed_offset
    cfg = cfg or probe_config()

    b4 = block4_analytic(p, s, 0.0, omega_z)
    b, c = biquadratic_coeffs(b4)
    roots = biquadratic_roots(b, c)
    if which == ProbeDirection.STABLE:
        lam = min(roots, key=lambda z: (z.real, -z.imag))
    else:
        lam = max(roots, key=lambda z: (z.real, z.imag))

    vec = block_eigenvector(b4, lam)
    real_part = vec.real
    if np.linalg.norm(real_part) < 1e-8:
        real_part = vec.imag
    direction = real_part / np.linalg.norm(real_part)

    seed = seed_offset * direction
    st0 = ReducedState(
        x=(float(seed[0]), float(seed[1])),
        v=(float(seed[2]), float(seed[3])),
        omega_z=omega_z,
    )
    r_above = min(1e4 * seed_offset, 0.5 * s.sweep_r_max)
    traj = integrate_reduced(
        p, s, st0, cfg,
        reverse=(which == ProbeDirection.UNSTABLE),
        radius_events={
            "below": ("below", settings.convergence_radius),
            "above": ("above", r_above),
        },
    )

    verdict = Verdict.INCONCLUSIVE
    if traj.event is not None and traj.event.name == "below":
        if math.isfinite(traj.final.omega_z):
            verdict = Verdict.CONVERGED
    elif traj.event is not None and traj.event.name == "above":
        verdict = Verdict.DIVERGED

    result = ManifoldProbeResult(
        direction=tuple(float(d) for d in direction),
        eigenvalue=complex(lam),
        seed_offset=seed_offset,
        trajectory=traj,
        verdict=verdict,
        sign_changes=spiral_sign_changes(traj.states),
        min_radius=min(traj.radii()),
    )
    logger.info(
        f"Manifold probe {which.value} at omega_z={omega_z!r}, Omega={p.Omega!r}: "
        f"{verdict.value}, lambda={lam:.6g}, {result.sign_changes} sign changes"
    )
    return result

