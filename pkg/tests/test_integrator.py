"""
Тесты для интегратора
"""

import math

import numpy as np
import pytest

from src.core.config import HaltReason
from src.mechanics.dynamics import FullState, ReducedState, SystemParams
from src.mechanics.errors import StepSizeUnderflowError
from src.mechanics.integrator import (
    IntegratorConfig,
    detect_vertex_approach,
    integrate_full,
    integrate_reduced,
    orthogonality_drift,
    project_to_rotation,
)
from src.mechanics.profile import Flat, Paraboloid


class TestIntegratorConfig:
    """Тесты для настроек интегратора"""

    @pytest.mark.parametrize("kwargs", [
        {"rel_tol": 0.0},
        {"max_step": 0.0},
        {"t_end": -1.0},
        {"t_end": 1.0, "dense_output_dt": 2.0},
    ])
    def test_invalid_config(self, kwargs):
        """Тест отклонения недопустимых настроек"""
        with pytest.raises(ValueError):
            IntegratorConfig(**kwargs)


class TestIntegrateReduced:
    """Тесты для редуцированного интегрирования"""

    def test_circular_orbit_closes(self):
        """Тест замыкания круговой орбиты за период 7π"""
        p = SystemParams(k=0.4, Omega=1.0)
        period = 2.0 * math.pi / (p.mu * p.Omega)
        st0 = ReducedState(x=(0.0, 0.0), v=(1.0, 0.0))
        cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, t_end=period, dense_output_dt=period / 50)

        traj = integrate_reduced(p, Flat(), st0, cfg)

        assert period == pytest.approx(7.0 * math.pi)
        assert traj.halt_reason == HaltReason.COMPLETED
        assert np.max(np.abs(traj.final.as_array() - st0.as_array())) < 1e-7

    def test_energy_conserved(self):
        """Тест сохранения движущейся энергии"""
        p = SystemParams(Omega=0.5)
        st0 = ReducedState(x=(0.5, 0.2), v=(0.1, -0.2), omega_z=0.3)
        traj = integrate_reduced(p, Paraboloid(c=0.5), st0, IntegratorConfig(t_end=20.0))

        energy = traj.diagnostics["energy"]
        assert max(abs(e - energy[0]) for e in energy) < 1e-8 * max(1.0, abs(energy[0]))

    def test_tilted_energy_conserved(self):
        """Тест сохранения механической энергии на наклонной поверхности"""
        p = SystemParams(alpha=0.3)
        st0 = ReducedState(x=(0.3, -0.4), v=(0.2, 0.1), omega_z=1.0)
        traj = integrate_reduced(p, Paraboloid(c=0.5), st0, IntegratorConfig(t_end=20.0))

        energy = traj.diagnostics["tilted_energy"]
        assert "energy" not in traj.diagnostics
        assert max(abs(e - energy[0]) for e in energy) < 1e-8 * max(1.0, abs(energy[0]))

    def test_sample_times(self):
        """Тест моментов выборки"""
        st0 = ReducedState(x=(0.0, 0.0), v=(0.1, 0.0))
        cfg = IntegratorConfig(t_end=1.0, dense_output_dt=0.25)
        traj = integrate_reduced(SystemParams(), Flat(), st0, cfg)

        assert traj.times == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
        assert traj.state_at(0.3).x[0] == pytest.approx(0.03, abs=1e-12)

    def test_domain_exit(self):
        """Тест остановки на границе области"""
        st0 = ReducedState(x=(0.5, 0.0), v=(1.0, 0.0))
        traj = integrate_reduced(SystemParams(), Flat(r_max=1.0), st0, IntegratorConfig(t_end=2.0))

        assert traj.halt_reason == HaltReason.DOMAIN_EXIT
        assert traj.times[-1] == pytest.approx(0.5, abs=1e-9)

    def test_radius_event(self):
        """Тест терминального события по радиусу"""
        st0 = ReducedState(x=(0.5, 0.0), v=(1.0, 0.0))
        traj = integrate_reduced(
            SystemParams(), Flat(), st0, IntegratorConfig(t_end=2.0),
            radius_events={"above": ("above", 0.8)},
        )

        assert traj.halt_reason == HaltReason.EVENT
        assert traj.event.name == "above"
        assert traj.event.t == pytest.approx(0.3, abs=1e-9)
        assert traj.final.radius == pytest.approx(0.8, abs=1e-9)

    def test_event_active_at_start(self):
        """Тест события, активного в начальный момент"""
        traj = integrate_reduced(
            SystemParams(), Flat(), ReducedState(x=(0.5, 0.0)), IntegratorConfig(t_end=1.0),
            radius_events={"below": ("below", 1.0)},
        )
        assert traj.event.t == 0.0
        assert traj.times == [0.0]

    def test_reverse_time(self):
        """Тест интегрирования назад по времени"""
        st0 = ReducedState(x=(0.5, 0.0), v=(1.0, 0.0))
        cfg = IntegratorConfig(t_end=0.2, dense_output_dt=0.1)
        traj = integrate_reduced(SystemParams(), Flat(), st0, cfg, reverse=True)

        assert traj.reversed_time
        assert traj.final.x[0] == pytest.approx(0.3, abs=1e-12)


class TestAccuracy:
    """Тесты для порядка сходимости и обратимости"""

    @staticmethod
    def _orbit_error(max_step: float) -> float:
        p = SystemParams(k=0.4, Omega=1.0)
        period = 2.0 * math.pi / (p.mu * p.Omega)
        st0 = ReducedState(x=(0.0, 0.0), v=(1.0, 0.0))
        cfg = IntegratorConfig(rel_tol=1.0, abs_tol=1.0, max_step=max_step,
                               t_end=period, dense_output_dt=period / 10)
        final = integrate_reduced(p, Flat(), st0, cfg).final
        return float(np.max(np.abs(final.as_array() - st0.as_array())))

    def test_fifth_order_convergence(self):
        """Тест порядка: на круговой орбите ошибка падает как h⁵"""
        coarse = self._orbit_error(0.4)
        fine = self._orbit_error(0.2)
        order = math.log2(coarse / fine)

        assert fine < coarse
        assert 4.0 < order < 6.5

    def test_forward_then_backward(self):
        """Тест возврата в начальное состояние после интегрирования назад"""
        p = SystemParams(Omega=0.5)
        s = Paraboloid(c=0.5)
        st0 = ReducedState(x=(0.5, 0.2), v=(0.1, -0.2), omega_z=0.3)
        cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_end=10.0, dense_output_dt=0.5)

        forward = integrate_reduced(p, s, st0, cfg)
        back = integrate_reduced(p, s, forward.final, cfg, reverse=True)

        assert forward.halt_reason == HaltReason.COMPLETED
        assert back.halt_reason == HaltReason.COMPLETED
        assert np.max(np.abs(back.final.as_array() - st0.as_array())) < 100 * cfg.rel_tol

    def test_step_underflow(self):
        """Тест исчерпания шага: ошибка несёт момент и последнее состояние"""
        cfg = IntegratorConfig(max_step=0.5, min_step=1.0, t_end=2.0, dense_output_dt=0.5)
        st0 = ReducedState(x=(0.5, 0.0), v=(0.1, 0.0))

        with pytest.raises(StepSizeUnderflowError) as exc:
            integrate_reduced(SystemParams(), Flat(), st0, cfg)

        assert exc.value.t == 0.0
        assert exc.value.state == [0.5, 0.0, 0.1, 0.0, 0.0]


class TestIntegrateFull:
    """Тесты для интегрирования с ориентацией"""

    def test_attitude_stays_orthogonal(self):
        """Тест ортогональности R и совпадения с редуцированной системой"""
        p = SystemParams(Omega=0.5)
        s = Paraboloid(c=0.5)
        st0 = ReducedState(x=(0.5, 0.0), v=(0.0, 0.3), omega_z=0.2)
        cfg = IntegratorConfig(t_end=2.0, dense_output_dt=0.5)

        full = integrate_full(p, s, FullState(st0), cfg)
        reduced = integrate_reduced(p, s, st0, cfg)

        assert len(full.attitudes) == len(full.states)
        assert max(full.diagnostics["orthogonality_drift"]) < 1e-12
        assert np.max(np.abs(full.final.as_array() - reduced.final.as_array())) < 1e-7

    def test_spin_about_vertical_axis(self):
        """Тест ω = (0, 0, 2): R(π/2) — поворот на π, R(π) = I"""
        st0 = ReducedState(x=(0.0, 0.0), v=(0.0, 0.0), omega_z=2.0)
        cfg = IntegratorConfig(t_end=math.pi, dense_output_dt=math.pi / 4)
        traj = integrate_full(SystemParams(), Flat(), FullState(st0), cfg)

        assert traj.times[2] == pytest.approx(0.5 * math.pi)
        assert np.allclose(traj.attitudes[2], np.diag([-1.0, -1.0, 1.0]), atol=1e-8)
        assert np.allclose(traj.attitudes[-1], np.eye(3), atol=1e-8)

    def test_projection(self):
        """Тест проекции на SO(3)"""
        R = np.eye(3) + 1e-3 * np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.5]])
        assert orthogonality_drift(project_to_rotation(R)) < 1e-14
        assert orthogonality_drift(np.eye(3)) == 0.0


class TestVertexApproach:
    """Тесты для подхода к вершине"""

    def test_detects_first_passage(self):
        """Тест первого прохода через окрестность вершины"""
        st0 = ReducedState(x=(0.5, 0.0), v=(-1.0, 0.0))
        traj = integrate_reduced(SystemParams(), Flat(), st0, IntegratorConfig(t_end=1.0))

        event = detect_vertex_approach(traj, 0.1)

        assert event.t == pytest.approx(0.4, abs=1e-9)
        assert event.v[0] == pytest.approx(-1.0)
        assert event.bounded is True
        assert event.omega_max is not None

    def test_no_approach(self):
        """Тест траектории, не подходящей к вершине"""
        st0 = ReducedState(x=(0.5, 0.0), v=(0.0, 0.0))
        traj = integrate_reduced(SystemParams(), Flat(), st0, IntegratorConfig(t_end=1.0))
        assert detect_vertex_approach(traj, 0.1) is None
