"""
Тесты для первых интегралов
"""

import math

import numpy as np
import pytest

from src.core.config import Verdict
from src.mechanics.conserved import (
    energy_bounds,
    energy_gradient_fd,
    energy_hessian_fd,
    energy_hessian_vertex,
    is_positive_definite,
    leading_minors,
    lyapunov_vertex_check,
    moving_energy,
    tilted_energy,
)
from src.mechanics.dynamics import ReducedState, SystemParams
from src.mechanics.errors import EmptyLevelSetError, NotConservedError, PreconditionError
from src.mechanics.profile import ConcaveCap, Flat, Paraboloid


class TestMovingEnergy:
    """Тесты для движущейся энергии"""

    def test_vertex_value(self):
        """Тест значения в вершине: ½kω_z² − kΩω_z"""
        p = SystemParams(k=0.4, Omega=1.5)
        st = ReducedState(x=(0.0, 0.0), omega_z=2.0)
        assert moving_energy(p, ConcaveCap(), st) == pytest.approx(0.5 * 0.4 * 4.0 - 0.4 * 1.5 * 2.0)

    def test_gradient_at_vertex(self):
        """Тест градиента (0, 0, 0, 0, k(ω_z − Ω)) в вершине"""
        p = SystemParams(k=0.4, Omega=0.7)
        grad = energy_gradient_fd(p, Paraboloid(c=0.5), ReducedState(x=(0.0, 0.0), omega_z=1.2))

        assert np.allclose(grad[:4], 0.0, atol=1e-8)
        assert grad[4] == pytest.approx(0.4 * (1.2 - 0.7), abs=1e-8)

    def test_hessian_matches_closed_form(self):
        """Тест гессиана в вершине"""
        p = SystemParams(k=0.4, Omega=0.8)
        st = ReducedState(x=(0.0, 0.0), omega_z=p.Omega)
        H = energy_hessian_fd(p, ConcaveCap(c=-0.5), st)
        assert np.allclose(H, energy_hessian_vertex(p, -0.5), atol=1e-6)

    def test_hessian_random_params(self):
        """Тест гессиана в вершине на 50 случайных наборах (k, ĝ, Ω, f₂)"""
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = SystemParams(
                k=float(rng.uniform(0.05, 0.95)),
                g_hat=float(rng.uniform(0.2, 3.0)),
                Omega=float(rng.uniform(-2.0, 2.0)),
            )
            f2 = float(rng.uniform(-0.8, 0.8))
            st = ReducedState(x=(0.0, 0.0), omega_z=p.Omega)

            H = energy_hessian_fd(p, Paraboloid(c=f2), st, step=1e-4)

            assert np.allclose(H, energy_hessian_vertex(p, f2), atol=1e-5), p

    def test_rejects_tilt(self):
        """Тест отказа при α ≠ 0"""
        with pytest.raises(NotConservedError):
            moving_energy(SystemParams(alpha=0.1), Flat(), ReducedState(x=(0.0, 0.0)))


class TestTiltedEnergy:
    """Тесты для механической энергии"""

    def test_agrees_with_moving_energy(self):
        """Тест совпадения с движущейся энергией при α = 0, Ω = 0"""
        st = ReducedState(x=(0.4, -0.3), v=(0.2, 0.5), omega_z=-0.7)
        s = Paraboloid(c=0.5)
        p = SystemParams()
        assert tilted_energy(p, s, st) == pytest.approx(moving_energy(p, s, st))

    def test_inclined_plane_potential(self):
        """Тест потенциала ĝx₁ sin α на наклонной плоскости"""
        p = SystemParams(alpha=0.2)
        assert tilted_energy(p, Flat(), ReducedState(x=(2.0, 0.0))) == pytest.approx(2.0 * math.sin(0.2))

    def test_rejects_rotation(self):
        """Тест отказа при Ω ≠ 0"""
        with pytest.raises(NotConservedError):
            tilted_energy(SystemParams(Omega=1.0), Flat(), ReducedState(x=(0.0, 0.0)))


class TestLyapunov:
    """Тесты для проверки Ляпунова в вершине"""

    def test_minors(self):
        """Тест главных миноров"""
        assert leading_minors(np.diag([1.0, 2.0, 3.0])) == pytest.approx([1.0, 2.0, 6.0])

    def test_positive_definite(self):
        """Тест критерия Сильвестра"""
        assert is_positive_definite(np.eye(3))
        assert not is_positive_definite(np.diag([1.0, -1.0, 1.0]))

    def test_stable_below_threshold(self):
        """Тест устойчивости при Ω² < ĝf″(0)"""
        assert lyapunov_vertex_check(SystemParams(Omega=0.7), 0.5) == Verdict.STABLE

    def test_inconclusive_above_threshold(self):
        """Тест неопределённого вердикта при Ω² > ĝf″(0)"""
        assert lyapunov_vertex_check(SystemParams(Omega=0.71), 0.5) == Verdict.INCONCLUSIVE

    def test_inconclusive_on_cap(self):
        """Тест колпака: устойчивость по Ляпунову не утверждается"""
        assert lyapunov_vertex_check(SystemParams(Omega=20.0), -0.5) == Verdict.INCONCLUSIVE


class TestEnergyBounds:
    """Тесты для оценок скоростей"""

    def test_bounds_formula(self):
        """Тест констант оценки"""
        p = SystemParams(k=0.4, Omega=1.0)
        bounds = energy_bounds(p, ConcaveCap(c=-0.5), E0=1.0, L=2.0)

        C = 0.5 * (0.4 + 4.0) + 1.0
        assert bounds.C == pytest.approx(C)
        assert bounds.v_max == pytest.approx(2.0 + math.sqrt(2.0 * (1.0 + C)))
        assert bounds.omega_max == pytest.approx(1.0 + math.sqrt(2.0 * (1.0 + C) / 0.4))

    def test_empty_level_set(self):
        """Тест пустого множества уровня"""
        with pytest.raises(EmptyLevelSetError):
            energy_bounds(SystemParams(), Flat(), E0=-1.0, L=1.0)

    def test_radius_outside_domain(self):
        """Тест L за пределами профиля"""
        with pytest.raises(PreconditionError):
            energy_bounds(SystemParams(), Flat(r_max=1.0), E0=0.0, L=2.0)

    def test_rejects_tilt(self):
        """Тест отказа при α ≠ 0"""
        with pytest.raises(NotConservedError):
            energy_bounds(SystemParams(alpha=0.1), Flat(), E0=0.0, L=1.0)
