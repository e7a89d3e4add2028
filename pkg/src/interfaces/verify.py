"""
Kasamawashi — Набор проверок verify
Каждая проверка — независимая задача пула; результат сводится
в таблицу PASS/FAIL.
"""
import asyncio
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from loguru import logger

from src.core.config import FamilyKind, HaltReason, ProbeDirection, Verdict
from src.core.task_queue import JobStatus, TaskQueue
from src.analysis.atlas import (
    GridAxis,
    asymptote_fit,
    boundary_bisection,
    manifold_probe,
    marked_points,
    stabilization_scan,
)
from src.analysis.linearization import (
    block4_analytic,
    evaluate_tilted,
    jacobian_fd,
    tilted_omega_threshold,
    tilted_stability,
    vertex_spectrum,
)
from src.mechanics.conserved import (
    energy_bounds,
    energy_hessian_vertex,
    is_positive_definite,
    lyapunov_vertex_check,
    moving_energy,
)
from src.mechanics.dynamics import (
    FullState,
    ReducedState,
    SystemParams,
    constraint_residual,
    reduced_vector_field,
    vector_field_fform,
)
from src.mechanics.equilibria import find_equilibria
from src.mechanics.integrator import IntegratorConfig, integrate_full, integrate_reduced
from src.mechanics.profile import (
    ConcaveCap,
    Flat,
    Paraboloid,
    Profile,
    Quartic,
    TruncatedCone,
    polynomial_profile,
)
from src.utils.decorators import measure_time

SEED = 20240501
N_RANDOM = 10_000
CONE_SLOPE = 0.57735026918962573
CONE_ALPHA = 0.52359877559829882


@dataclass
class SuiteResult:
    name: str
    ok: bool
    details: str


def smooth_profiles() -> list[Profile]:
    return [
        Flat(),
        Paraboloid(c=0.5),
        ConcaveCap(c=-0.5),
        Quartic(r_max=3.0, c2=-0.5, c4=0.5),
        polynomial_profile([0.0, -0.5, 0.5], r_max=3.0, label="double_well"),
    ]


def _random_state(rng: np.random.Generator, s: Profile) -> ReducedState:
    r = rng.uniform(0.05, 0.999 * s.sweep_r_max)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return ReducedState(
        x=(r * math.cos(phi), r * math.sin(phi)),
        v=(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
        omega_z=rng.uniform(-5.0, 5.0),
    )


def _random_params(rng: np.random.Generator, alpha_max: float = 0.0) -> SystemParams:
    return SystemParams(
        k=rng.uniform(0.05, 0.95),
        g_hat=rng.uniform(0.2, 3.0),
        Omega=rng.uniform(-2.0, 2.0),
        alpha=rng.uniform(0.0, alpha_max),
    )


def check_dual_form() -> SuiteResult:
    """ψ-форма и f-форма поля совпадают на случайных состояниях"""
    rng = np.random.default_rng(SEED)
    profiles = smooth_profiles()
    worst = 0.0
    for i in range(N_RANDOM):
        s = profiles[i % len(profiles)]
        p = _random_params(rng, alpha_max=0.5)
        st = _random_state(rng, s)
        a = reduced_vector_field(p, s, st).as_array()
        b = vector_field_fform(p, s, st).as_array()
        err = float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(a))))
        worst = max(worst, err)
    return SuiteResult("dual_form", worst < 1e-10, f"max rel err {worst:.3e} on {N_RANDOM} states")


def check_constraint() -> SuiteResult:
    """Третья компонента условия качения и полная невязка"""
    rng = np.random.default_rng(SEED + 1)
    profiles = smooth_profiles()
    worst_z = 0.0
    worst_xy = 0.0
    for i in range(N_RANDOM):
        s = profiles[i % len(profiles)]
        p = _random_params(rng)
        res = constraint_residual(p, s, _random_state(rng, s))
        worst_z = max(worst_z, abs(float(res[2])))
        worst_xy = max(worst_xy, float(np.max(np.abs(res[:2]))))
    ok = worst_z < 1e-10 and worst_xy < 1e-10
    return SuiteResult("constraint", ok, f"z {worst_z:.3e}, xy {worst_xy:.3e}")


ENERGY_T_END = 100.0


def energy_profiles() -> list[Profile]:
    """Профили, на которых орбита из ENERGY_STATE не покидает области до ENERGY_T_END"""
    return [
        Flat(r_max=math.inf),
        Paraboloid(c=0.5),
        Quartic(r_max=3.0, c2=-0.5, c4=0.5),
    ]


ENERGY_STATE = ReducedState(x=(0.5, 0.2), v=(0.1, -0.2), omega_z=0.3)


def _energy_runs():
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_end=ENERGY_T_END, dense_output_dt=0.5)
    for s in energy_profiles():
        for Om in (0.0, 0.5, 2.0):
            p = SystemParams(Omega=Om)
            yield p, s, integrate_reduced(p, s, ENERGY_STATE, cfg)


def check_energy() -> SuiteResult:
    """Дрейф считается только по траекториям, дошедшим до ENERGY_T_END"""
    worst = 0.0
    short = []
    for p, s, traj in _energy_runs():
        if traj.halt_reason != HaltReason.COMPLETED or traj.times[-1] != ENERGY_T_END:
            short.append(f"{s.kind.value}@Omega={p.Omega:g} stopped at t={traj.times[-1]:.6g}")
            continue
        energy = traj.diagnostics["energy"]
        drift = max(abs(e - energy[0]) for e in energy) / max(1.0, abs(energy[0]))
        worst = max(worst, drift)
    details = f"max relative drift {worst:.3e}"
    if short:
        details += "; " + ", ".join(short)
    return SuiteResult("energy", not short and worst < 1e-8, details)


def check_energy_bounds() -> SuiteResult:
    """|v| и |ω_z| не превышают оценок на множестве уровня"""
    worst = -math.inf
    for p, s, traj in _energy_runs():
        L = max(traj.radii())
        bounds = energy_bounds(p, s, moving_energy(p, s, traj.states[0]), L)
        for st in traj.states:
            worst = max(
                worst,
                math.hypot(*st.v) - bounds.v_max,
                abs(st.omega_z) - bounds.omega_max,
            )
    return SuiteResult("energy_bounds", worst <= 1e-9, f"max excess {worst:.3e}")


def check_tilted_energy() -> SuiteResult:
    p = SystemParams(alpha=0.3)
    s = Paraboloid(c=0.5)
    cfg = IntegratorConfig(t_end=50.0, dense_output_dt=0.5)
    traj = integrate_reduced(p, s, ReducedState(x=(0.3, -0.4), v=(0.2, 0.1), omega_z=1.0), cfg)
    energy = traj.diagnostics["tilted_energy"]
    drift = max(abs(e - energy[0]) for e in energy) / max(1.0, abs(energy[0]))
    return SuiteResult("tilted_energy", drift < 1e-8, f"relative drift {drift:.3e}")


def check_circular_orbit() -> SuiteResult:
    """Плоскость, Ω = 1: круговая орбита с периодом 2π/(μΩ) = 7π"""
    p = SystemParams(k=0.4, Omega=1.0)
    period = 2.0 * math.pi / (p.mu * p.Omega)
    st0 = ReducedState(x=(1.0, 0.0), v=(0.0, 0.5), omega_z=0.0)
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, t_end=period, dense_output_dt=period / 100)
    final = integrate_reduced(p, Flat(), st0, cfg).final
    err = float(np.max(np.abs(final.as_array() - st0.as_array())))
    return SuiteResult("circular_orbit", err < 1e-7, f"closure error {err:.3e} at t={period:.6f}")


def check_attitude() -> SuiteResult:
    p = SystemParams(Omega=0.5)
    s = Paraboloid(c=0.5)
    cfg = IntegratorConfig(t_end=10.0, dense_output_dt=0.5)
    st0 = ReducedState(x=(0.5, 0.0), v=(0.0, 0.3), omega_z=0.2)
    full = integrate_full(p, s, FullState(st0), cfg)
    reduced = integrate_reduced(p, s, st0, cfg)
    drift = max(full.diagnostics["orthogonality_drift"])
    gap = float(np.max(np.abs(full.final.as_array() - reduced.final.as_array())))
    return SuiteResult("attitude", drift < 1e-12 and gap < 1e-7,
                       f"orthogonality {drift:.3e}, reduced gap {gap:.3e}")


def _equilibrium_cases(rng: np.random.Generator):
    """(params, profile, x1) для всех встроенных профилей; k и ĝ случайные"""
    cases = []

    def draw(Omega: float, alpha: float = 0.0) -> SystemParams:
        return SystemParams(k=rng.uniform(0.05, 0.95), g_hat=rng.uniform(0.2, 3.0),
                            Omega=Omega, alpha=alpha)

    for s in [Paraboloid(c=0.5), ConcaveCap(c=-0.5), Quartic(r_max=3.0, c2=-0.5, c4=0.5),
              polynomial_profile([0.0, -0.5, 0.5], r_max=3.0)]:
        for Om in (0.0, 0.7):
            p = draw(Om)
            for fam in find_equilibria(p, s):
                if fam.kind in (FamilyKind.VERTEX, FamilyKind.CRITICAL_PARALLEL):
                    cases.append((p, s, fam.x1))
    cap = ConcaveCap(c=-0.5)
    for Om in (0.0, 0.7):
        p = draw(Om, alpha=math.pi / 6)
        cases.extend((p, cap, fam.x1) for fam in find_equilibria(p, cap)
                     if fam.kind == FamilyKind.TILTED_POINT)
        cases.append((replace(p, alpha=CONE_ALPHA), TruncatedCone(slope=CONE_SLOPE, delta=0.1), 1.5))
    return cases


def check_linearization() -> SuiteResult:
    worst_block = 0.0
    worst_col = 0.0
    count = 0
    for p, s, x1 in _equilibrium_cases(np.random.default_rng(SEED + 3)):
        for wz in (0.0, 1.3, -2.0):
            block = block4_analytic(p, s, x1, wz).matrix()
            J = jacobian_fd(p, s, ReducedState(x=(x1, 0.0), omega_z=wz))
            worst_block = max(worst_block, float(np.max(np.abs(J[:4, :4] - block))))
            worst_col = max(worst_col, float(np.linalg.norm(J[:, 4])))
            count += 1
    ok = worst_block < 1e-5 and worst_col < 1e-6
    return SuiteResult("linearization", ok,
                       f"{count} equilibria, block err {worst_block:.3e}, column-5 norm {worst_col:.3e}")


# (f″(0), ω_z, Ω, ожидаемый тип)
CASE_TABLE = [
    (0.0, 0.0, 0.0, "ZZZZ"),
    (0.0, -3.0, 0.0, "ZZZZ"),
    (0.0, 0.0, 1.0, "ZZCC"),
    (0.0, 4.0, -2.0, "ZZCC"),
    (0.5, 0.0, 0.0, "CCCC"),
    (0.5, -2.0, 3.0, "CCCC"),
    (-0.5, 9.0, 0.0, "CCCC"),
    (-0.5, 0.0, 10.0, "CCCC"),
    (-0.5, 4.0, 0.0, "F+F+F-F-"),
    (-0.5, 0.0, 4.0, "F+F+F-F-"),
    (-0.5, 0.0, 0.0, "R+R+R-R-"),
    (-0.5, 2.0, -2.0, "R+R+R-R-"),
]


def check_case_table() -> SuiteResult:
    p = SystemParams()
    wrong = [
        (f2, wz, Om, expected)
        for f2, wz, Om, expected in CASE_TABLE
        if vertex_spectrum(replace(p, Omega=Om), f2, wz).type_string != expected
    ]
    p_point, q_point = marked_points(p, -0.5)
    t_p = boundary_bisection(p, -0.5, (0.0, 0.0), (1.0, 0.0), 8.0, 9.0)
    t_q = boundary_bisection(p, -0.5, (0.0, 0.0), (0.0, 1.0), 8.0, 9.0)
    gap = max(abs(t_p - p_point[0]), abs(t_q - q_point[1]))
    return SuiteResult("case_table", not wrong and gap < 1e-9,
                       f"{len(CASE_TABLE) - len(wrong)}/{len(CASE_TABLE)} branches, p at {t_p:.9f}, "
                       f"boundary gap {gap:.3e}")


def check_stabilization() -> SuiteResult:
    p = SystemParams()
    worst = 0.0
    for wz in (-3.0, 0.0, 3.0):
        scan = stabilization_scan(p, -0.5, wz)
        worst = max(worst, abs(scan.Omega_plus - scan.predicted_plus),
                    abs(scan.Omega_minus - scan.predicted_minus))
    return SuiteResult("stabilization", worst < 1e-9, f"max edge error {worst:.3e}")


def check_lyapunov() -> SuiteResult:
    p = SystemParams(g_hat=1.0)
    threshold = math.sqrt(0.5)
    below = lyapunov_vertex_check(replace(p, Omega=threshold - 1e-4), 0.5)
    above = lyapunov_vertex_check(replace(p, Omega=threshold + 1e-4), 0.5)

    rng = np.random.default_rng(SEED + 2)
    disagreements = 0
    for _ in range(50):
        q = replace(p, Omega=rng.uniform(-2.0, 2.0))
        f2 = rng.uniform(-1.0, 1.0)
        closed = f2 > 0.0 and q.Omega ** 2 < q.g_hat * f2
        if is_positive_definite(energy_hessian_vertex(q, f2)) != closed:
            disagreements += 1
    ok = below == Verdict.STABLE and above == Verdict.INCONCLUSIVE and disagreements == 0
    return SuiteResult("lyapunov", ok,
                       f"below {below.value}, above {above.value}, {disagreements} disagreements")


def _dual_route_disagreements(p: SystemParams, s: Profile, x1: float) -> int:
    tilted_stability(p, s, x1, 0.0)
    axis = GridAxis(-10.0, 10.0, 101).values()
    count = 0
    for Om in axis:
        row_params = replace(p, Omega=Om)
        for wz in axis:
            result = evaluate_tilted(row_params, s, x1, wz)
            if result.stable != result.bc_stable and abs(result.lhs_minus_rhs) >= 1e-9:
                count += 1
    return count


def check_tilted_routes() -> SuiteResult:
    cone = TruncatedCone(slope=CONE_SLOPE, delta=0.1)
    p_cone = SystemParams(alpha=CONE_ALPHA)
    cap = ConcaveCap(c=-0.5)
    p_cap = SystemParams(alpha=math.pi / 6)
    x_cap = next(f.x1 for f in find_equilibria(p_cap, cap) if f.kind == FamilyKind.TILTED_POINT)

    bad = _dual_route_disagreements(p_cone, cone, 1.5) + _dual_route_disagreements(p_cap, cap, x_cap)
    zero_row_stable = sum(
        tilted_stability(p_cone, cone, 1.5, wz).stable for wz in GridAxis(-10.0, 10.0, 101).values()
    )
    fit = asymptote_fit(p_cone, cone, 1.5)
    ok = bad == 0 and zero_row_stable == 0 and fit.slope_error < 1e-6 and abs(fit.axis_slope) < 1e-6
    return SuiteResult("tilted_routes", ok,
                       f"{bad} disagreements, {zero_row_stable} stable cells at Omega=0, "
                       f"asymptote slope err {fit.slope_error:.3e}")


def check_manifolds() -> SuiteResult:
    p = SystemParams()
    s = ConcaveCap(c=-0.5)
    stable_b0 = manifold_probe(p, s, 0.0, ProbeDirection.STABLE)
    unstable_b0 = manifold_probe(p, s, 0.0, ProbeDirection.UNSTABLE)
    spiral = manifold_probe(p, s, 8.2, ProbeDirection.STABLE)
    ok = (
        stable_b0.verdict == Verdict.CONVERGED and not stable_b0.spiraling
        and unstable_b0.verdict != Verdict.INCONCLUSIVE
        and spiral.verdict == Verdict.CONVERGED and spiral.spiraling
    )
    return SuiteResult("manifolds", ok,
                       f"B=0: {stable_b0.verdict.value}/{unstable_b0.verdict.value}, "
                       f"omega_z=8.2: {spiral.verdict.value} with {spiral.sign_changes} sign changes")


def check_small_alpha() -> SuiteResult:
    """Порог наклонного равновесия стремится к порогу вершины при α → 0"""
    s = ConcaveCap(c=-0.5)
    target = marked_points(SystemParams(), -0.5)[0][0]
    errors = []
    for alpha in (1e-1, 1e-2, 1e-3, 1e-4):
        p = SystemParams(alpha=alpha)
        x1 = next(f.x1 for f in find_equilibria(p, s, xtol=1e-18)
                  if f.kind == FamilyKind.TILTED_POINT and f.x1 > 0.0)
        errors.append(abs(tilted_omega_threshold(p, s, x1) - target))
    ok = errors[0] > errors[1] > errors[2] and errors[3] <= max(errors[2], 1e-12)
    return SuiteResult("small_alpha", ok, "errors " + ", ".join(f"{e:.2e}" for e in errors))


SUITES: list[Callable[[], SuiteResult]] = [
    check_dual_form,
    check_constraint,
    check_energy,
    check_energy_bounds,
    check_tilted_energy,
    check_circular_orbit,
    check_attitude,
    check_linearization,
    check_case_table,
    check_stabilization,
    check_lyapunov,
    check_tilted_routes,
    check_manifolds,
    check_small_alpha,
]


@measure_time
async def run_suites(suites: list[Callable[[], SuiteResult]] = None,
                     threads: int = None) -> list[SuiteResult]:
    queue = TaskQueue(threads)
    jobs = [queue.submit(fn.__name__, fn) for fn in (suites or SUITES)]
    await queue.run()

    results = []
    for job in jobs:
        if job.status == JobStatus.COMPLETED:
            results.append(job.result)
        else:
            results.append(SuiteResult(job.name.removeprefix("check_"), False, job.error or "failed"))
    failed = [r.name for r in results if not r.ok]
    if failed:
        logger.warning(f"Verification failed: {failed}")
    return results


def run_verify(suites: list[Callable[[], SuiteResult]] = None, threads: int = None) -> list[SuiteResult]:
    return asyncio.run(run_suites(suites, threads))
