"""
Kasamawashi — Интегратор
Явная пара Дормана–Принса 5(4) с PI-регулятором шага, плотным выводом
четвёртого порядка, терминальными событиями и проекцией ориентации на SO(3).
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy.linalg import polar

from src.core.config import HaltReason
from src.mechanics.conserved import energy_bounds, moving_energy, tilted_energy
from src.mechanics.dynamics import (
    FullState,
    ReducedState,
    SystemParams,
    field_rhs,
    full_rhs,
)
from src.mechanics.errors import (
    DomainError,
    EmptyLevelSetError,
    PreconditionError,
    StepSizeUnderflowError,
)
from src.mechanics.profile import Profile

# Таблица Бутчера DOPRI5
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
# b − b̂ (оценка ошибки вложенной пары)
_E = np.array([
    -71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40,
])
# Коэффициенты плотного вывода: y(t + θh) = y + h·Kᵀ(P·[θ, θ², θ³, θ⁴])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
BETA = 0.04
EXPO = 0.2 - 0.75 * BETA
FAC_MIN = 0.2
FAC_MAX = 10.0
EVENT_TIME_TOL = 1e-10
VERTEX_SUBSAMPLES = 32


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    t_end: float = 10.0
    dense_output_dt: float = 0.1
    min_step: float = 1e-13

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("Integrator tolerances must be positive")
        if not self.max_step > 0.0:
            raise ValueError("max_step must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if not 0.0 < self.dense_output_dt <= self.t_end:
            raise ValueError("dense_output_dt must lie in (0, t_end]")

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": self.max_step,
            "t_end": self.t_end,
            "dense_output_dt": self.dense_output_dt,
        }


@dataclass
class DenseSegment:
    """Один принятый шаг с данными для интерполяции"""
    t0: float
    h: float
    y0: np.ndarray
    K: np.ndarray

    @property
    def t1(self) -> float:
        return self.t0 + self.h

    def __call__(self, t: float) -> np.ndarray:
        theta = (t - self.t0) / self.h
        powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
        return self.y0 + self.h * (self.K.T @ (_P @ powers))


@dataclass
class EventRecord:
    name: str
    t: float
    state: np.ndarray


@dataclass
class Solution:
    times: list[float]
    values: list[np.ndarray]
    segments: list[DenseSegment]
    halt_reason: HaltReason
    message: str = ""
    event: Optional[EventRecord] = None
    n_steps: int = 0
    n_rejected: int = 0
    n_evals: int = 0


# Терминальное событие: имя и функция g(y); срабатывает при смене знака g
Event = tuple[str, Callable[[np.ndarray], float]]


class DormandPrince:
    """Адаптивный интегратор DOPRI5 для автономных систем ẏ = f(y)"""

    def __init__(self, rhs: Callable[[np.ndarray], list], cfg: IntegratorConfig):
        self.rhs = rhs
        self.cfg = cfg
        self._stats = {"steps": 0, "rejected": 0, "evals": 0}

    def _f(self, y: np.ndarray) -> np.ndarray:
        self._stats["evals"] += 1
        return np.asarray(self.rhs(y.tolist()), dtype=float)

    def _error_norm(self, err: np.ndarray, y: np.ndarray, y_new: np.ndarray) -> float:
        scale = self.cfg.abs_tol + self.cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        return float(np.sqrt(np.mean((err / scale) ** 2)))

    def _initial_step(self, y0: np.ndarray, f0: np.ndarray) -> float:
        scale = self.cfg.abs_tol + self.cfg.rel_tol * np.abs(y0)
        d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
        d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, self.cfg.max_step)
        try:
            f1 = self._f(y0 + h0 * f0)
        except DomainError:
            return h0
        d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100.0 * h0, h1, self.cfg.max_step)

    def _stages(self, y: np.ndarray, f0: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
        K = np.empty((7, y.size))
        K[0] = f0
        for i in range(1, 7):
            K[i] = self._f(y + h * (_A[i, :i] @ K[:i]))
        y_new = y + h * (_A[6, :6] @ K[:6])
        return K, y_new

    def solve(
        self,
        y0: np.ndarray,
        t_end: float,
        sample_dt: float,
        events: Optional[list[Event]] = None,
        post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> Solution:
        """
        Интегрирование на [0, t_end]. Выборка в моменты, кратные sample_dt,
        и в момент остановки. post_step применяется к каждому принятому
        состоянию (проекция ориентации).
        """
        events = events or []
        y = np.asarray(y0, dtype=float).copy()
        t = 0.0
        f = self._f(y)

        segments: list[DenseSegment] = []
        times = [0.0]
        values = [y.copy()]
        next_sample = 1

        g_prev = [g(y) for _, g in events]
        for (name, _), g0 in zip(events, g_prev):
            if g0 <= 0.0:
                return Solution(times, values, segments, HaltReason.EVENT,
                                f"event '{name}' active at t=0",
                                EventRecord(name, 0.0, y.copy()))

        h = self._initial_step(y, f)
        err_prev = 1e-4
        reason = HaltReason.COMPLETED
        message = ""
        event: Optional[EventRecord] = None

        while t < t_end:
            h = min(h, self.cfg.max_step, t_end - t)
            min_step = self.cfg.min_step * max(1.0, abs(t))
            if h < min_step:
                raise StepSizeUnderflowError(t, h, y.tolist())

            try:
                K, y_new = self._stages(y, f, h)
            except DomainError as e:
                # шаг вывел стадию за область: дробим до минимального шага
                if h * 0.5 < min_step:
                    reason = HaltReason.DOMAIN_EXIT
                    message = f"state left the profile domain near t={t!r}: {e}"
                    logger.warning(message)
                    break
                h *= 0.5
                self._stats["rejected"] += 1
                continue

            err = self._error_norm(h * (K.T @ _E), y, y_new)
            if err > 1.0:
                self._stats["rejected"] += 1
                h /= min(1.0 / FAC_MIN, err ** EXPO / SAFETY)
                continue

            segment = DenseSegment(t, h, y.copy(), K.copy())
            t_new = t + h
            if t_end - t_new < 1e-12 * max(1.0, abs(t_end)):
                t_new = t_end
            f_new = K[6]
            if post_step is not None:
                projected = post_step(y_new)
                if projected is not y_new:
                    y_new = projected
                    f_new = self._f(y_new)

            # события
            hit = None
            for idx, (name, g) in enumerate(events):
                g_new = g(y_new)
                if g_new <= 0.0 < g_prev[idx]:
                    t_hit = self._locate(segment, g, t, t_new)
                    if hit is None or t_hit < hit[1]:
                        hit = (name, t_hit, g)
                g_prev[idx] = g_new

            if hit is not None:
                name, t_hit, _ = hit
                y_hit = segment(t_hit)
                if post_step is not None:
                    y_hit = post_step(y_hit)
                segments.append(segment)
                while next_sample * sample_dt < t_hit:
                    times.append(next_sample * sample_dt)
                    values.append(self._sample(segment, next_sample * sample_dt, post_step))
                    next_sample += 1
                times.append(t_hit)
                values.append(y_hit)
                event = EventRecord(name, t_hit, y_hit.copy())
                reason = HaltReason.EVENT
                message = f"event '{name}' at t={t_hit!r}"
                self._stats["steps"] += 1
                return self._finish(times, values, segments, reason, message, event)

            segments.append(segment)
            while next_sample * sample_dt < t_new - 1e-12 * max(1.0, t_new):
                ts = next_sample * sample_dt
                times.append(ts)
                values.append(self._sample(segment, ts, post_step))
                next_sample += 1

            t, y, f = t_new, y_new, f_new
            self._stats["steps"] += 1

            fac = err ** EXPO / (err_prev ** BETA) / SAFETY if err > 0.0 else 1.0 / FAC_MAX
            h /= max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac))
            err_prev = max(err, 1e-4)

        if times[-1] < t:
            times.append(t)
            values.append(y.copy())
        return self._finish(times, values, segments, reason, message, event)

    def _finish(self, times, values, segments, reason, message, event) -> Solution:
        return Solution(
            times=times, values=values, segments=segments,
            halt_reason=reason, message=message, event=event,
            n_steps=self._stats["steps"], n_rejected=self._stats["rejected"],
            n_evals=self._stats["evals"],
        )

    @staticmethod
    def _sample(segment: DenseSegment, t: float, post_step) -> np.ndarray:
        y = segment(t)
        return post_step(y) if post_step is not None else y

    @staticmethod
    def _locate(segment: DenseSegment, g, t_lo: float, t_hi: float) -> float:
        """Бисекция по плотному выводу до EVENT_TIME_TOL"""
        while t_hi - t_lo > EVENT_TIME_TOL:
            t_mid = 0.5 * (t_lo + t_hi)
            if g(segment(t_mid)) <= 0.0:
                t_hi = t_mid
            else:
                t_lo = t_mid
        return t_hi


# === Траектории ===

@dataclass
class Trajectory:
    times: list[float]
    states: list[ReducedState]
    attitudes: Optional[list[np.ndarray]] = None
    diagnostics: dict[str, list[float]] = field(default_factory=dict)
    halt_reason: HaltReason = HaltReason.COMPLETED
    message: str = ""
    params: Optional[SystemParams] = None
    profile: Optional[Profile] = None
    segments: list[DenseSegment] = field(default_factory=list)
    reversed_time: bool = False
    event: Optional[EventRecord] = None

    @property
    def final(self) -> ReducedState:
        return self.states[-1]

    def radii(self) -> list[float]:
        return [st.radius for st in self.states]

    def state_at(self, t: float) -> ReducedState:
        """Состояние по плотному выводу"""
        for seg in self.segments:
            if seg.t0 <= t <= seg.t1:
                return ReducedState.from_array(seg(t)[:5])
        raise ValueError(f"t={t!r} outside the integrated interval")


def _energy_diagnostics(p: SystemParams, s: Profile, states: list[ReducedState]) -> dict:
    if p.alpha == 0.0:
        return {"energy": [moving_energy(p, s, st) for st in states]}
    if p.Omega == 0.0:
        return {"tilted_energy": [tilted_energy(p, s, st) for st in states]}
    return {}


def _radius_events(s: Profile, radius_events: Optional[dict]) -> list[Event]:
    events = []
    for name, (kind, radius) in (radius_events or {}).items():
        if kind == "below":
            events.append((name, lambda y, r=radius: math.hypot(y[0], y[1]) - r))
        else:
            events.append((name, lambda y, r=radius: r - math.hypot(y[0], y[1])))
    return events


def integrate_reduced(
    p: SystemParams,
    s: Profile,
    st0: ReducedState,
    cfg: IntegratorConfig,
    reverse: bool = False,
    radius_events: Optional[dict] = None,
) -> Trajectory:
    """
    Интегрирование редуцированного поля. reverse=True интегрирует
    поле с обратным знаком (движение назад во времени, τ = −t).
    radius_events: {имя: ("below"|"above", радиус)} — терминальные события.
    """
    s.f_jet(st0.radius)
    sign = -1.0 if reverse else 1.0

    def rhs(y):
        d = field_rhs(p, s, y)
        return [sign * c for c in d] if reverse else d

    solver = DormandPrince(rhs, cfg)
    sol = solver.solve(
        st0.as_array(), cfg.t_end, cfg.dense_output_dt,
        events=_radius_events(s, radius_events),
    )
    states = [ReducedState.from_array(y) for y in sol.values]
    traj = Trajectory(
        times=sol.times,
        states=states,
        diagnostics=_energy_diagnostics(p, s, states),
        halt_reason=sol.halt_reason,
        message=sol.message,
        params=p,
        profile=s,
        segments=sol.segments,
        reversed_time=reverse,
        event=sol.event,
    )
    logger.debug(
        f"integrate_reduced: {sol.n_steps} steps, {sol.n_rejected} rejected, "
        f"{sol.n_evals} evals, halt={sol.halt_reason.value}"
    )
    return traj


def project_to_rotation(R: np.ndarray) -> np.ndarray:
    """Ближайшая ортогональная матрица (полярное разложение)"""
    U, _ = polar(R)
    if np.linalg.det(U) < 0.0:
        raise PreconditionError("Attitude projection left SO(3)")
    return U


def orthogonality_drift(R: np.ndarray) -> float:
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def integrate_full(
    p: SystemParams,
    s: Profile,
    fs0: FullState,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Совместное интегрирование (x, v, ω_z) и ориентации Ṙ = ω̂R"""
    s.f_jet(fs0.reduced.radius)
    drifts: list[float] = []

    def project(y: np.ndarray) -> np.ndarray:
        R = y[5:14].reshape(3, 3)
        drifts.append(orthogonality_drift(R))
        out = y.copy()
        out[5:14] = project_to_rotation(R).ravel()
        return out

    y0 = np.concatenate([fs0.reduced.as_array(), fs0.attitude().ravel()])
    solver = DormandPrince(lambda y: full_rhs(p, s, y), cfg)
    sol = solver.solve(y0, cfg.t_end, cfg.dense_output_dt, post_step=project)

    states = [ReducedState.from_array(y[:5]) for y in sol.values]
    attitudes = [y[5:14].reshape(3, 3).copy() for y in sol.values]
    diagnostics = _energy_diagnostics(p, s, states)
    diagnostics["orthogonality_drift"] = [orthogonality_drift(R) for R in attitudes]
    diagnostics["max_step_drift"] = [max(drifts) if drifts else 0.0]

    logger.debug(
        f"integrate_full: {sol.n_steps} steps, "
        f"max pre-projection drift {max(drifts) if drifts else 0.0:.3e}"
    )
    return Trajectory(
        times=sol.times,
        states=states,
        attitudes=attitudes,
        diagnostics=diagnostics,
        halt_reason=sol.halt_reason,
        message=sol.message,
        params=p,
        profile=s,
        segments=sol.segments,
    )


@dataclass
class VertexEvent:
    t: float
    v: tuple[float, float]
    omega_z: float
    omega_max: Optional[float] = None
    bounded: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "v": list(self.v),
            "omega_z": self.omega_z,
            "omega_max": self.omega_max,
            "bounded": self.bounded,
        }


def detect_vertex_approach(traj: Trajectory, radius_eps: float) -> Optional[VertexEvent]:
    """
    Первый момент |x(t)| < radius_eps. Время уточняется бисекцией
    по плотному выводу; |ω_z| в событии сверяется с оценкой omega_max.
    """
    hit: Optional[tuple[float, ReducedState]] = None

    if traj.states[0].radius < radius_eps:
        hit = (traj.times[0], traj.states[0])
    elif traj.segments:
        def g(y):
            return math.hypot(y[0], y[1]) - radius_eps

        # длинный шаг может пройти вершину насквозь: проверяем внутренние узлы
        for seg in traj.segments:
            t_prev = seg.t0
            for t in np.linspace(seg.t0, seg.t1, VERTEX_SUBSAMPLES + 1)[1:]:
                if g(seg(float(t))) < 0.0:
                    t_hit = DormandPrince._locate(seg, g, t_prev, float(t))
                    hit = (t_hit, ReducedState.from_array(seg(t_hit)[:5]))
                    break
                t_prev = float(t)
            if hit is not None:
                break
    else:
        for t, st in zip(traj.times, traj.states):
            if st.radius < radius_eps:
                hit = (t, st)
                break

    if hit is None:
        return None

    t_hit, st = hit
    event = VertexEvent(t=t_hit, v=st.v, omega_z=st.omega_z)
    p, s = traj.params, traj.profile
    if p is not None and s is not None and p.alpha == 0.0:
        L = min(max(max(traj.radii()), 1e-12), s.r_max)
        try:
            bounds = energy_bounds(p, s, moving_energy(p, s, traj.states[0]), L)
            event.omega_max = bounds.omega_max
            event.bounded = abs(st.omega_z) <= bounds.omega_max + 1e-9
        except EmptyLevelSetError as e:
            logger.warning(f"Vertex event bound check skipped: {e}")
    return event
