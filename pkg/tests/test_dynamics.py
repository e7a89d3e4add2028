"""
Тесты для редуцированной динамики
"""

import math

import numpy as np
import pytest

from src.mechanics.dynamics import (
    FullState,
    ReducedState,
    SystemParams,
    attitude_rhs,
    constraint_omega,
    constraint_residual,
    constraint_residual_z,
    full_rhs,
    hat,
    reduced_vector_field,
    vector_field_fform,
)
from src.mechanics.errors import NumericError, PreconditionError, VertexSingularityError
from src.mechanics.profile import ConcaveCap, Custom, Flat, Paraboloid, Quartic, polynomial_profile


class TestSystemParams:
    """Тесты для физических параметров"""

    def test_derived_constants(self):
        """Тест γ и μ для сплошного шара"""
        p = SystemParams(k=0.4)
        assert p.gamma == pytest.approx(5.0 / 7.0)
        assert p.mu == pytest.approx(2.0 / 7.0)

    @pytest.mark.parametrize("kwargs", [
        {"k": 0.0},
        {"k": 1.0},
        {"g_hat": 0.0},
        {"alpha": -0.1},
        {"alpha": 0.5 * math.pi},
        {"Omega": math.inf},
    ])
    def test_invalid_params(self, kwargs):
        """Тест отклонения недопустимых параметров"""
        with pytest.raises(ValueError):
            SystemParams(**kwargs)

    def test_state_array_roundtrip(self):
        """Тест упаковки состояния"""
        st = ReducedState(x=(0.1, 0.2), v=(0.3, 0.4), omega_z=0.5)
        assert ReducedState.from_array(st.as_array()) == st
        assert st.radius == pytest.approx(math.hypot(0.1, 0.2))


class TestReducedField:
    """Тесты для векторного поля"""

    def test_flat_rotating_plane(self):
        """Тест плоскости: v̇ = μΩ(−v₂, v₁)"""
        p = SystemParams(k=0.4, Omega=1.0)
        d = reduced_vector_field(p, Flat(), ReducedState(x=(1.0, 0.0), v=(0.0, 1.0)))

        assert d.dx == (0.0, 1.0)
        assert d.dv[0] == pytest.approx(-2.0 / 7.0)
        assert d.dv[1] == pytest.approx(0.0, abs=1e-15)
        assert d.domega_z == 0.0

    def test_inclined_plane(self):
        """Тест наклонной плоскости: ускорение γ·sin α вниз по склону"""
        p = SystemParams(alpha=0.3)
        d = reduced_vector_field(p, Flat(), ReducedState(x=(0.5, 0.5)))

        assert d.dv[0] == pytest.approx(-p.gamma * math.sin(0.3))
        assert d.dv[1] == pytest.approx(0.0, abs=1e-15)

    def test_concave_cap_rest_state(self):
        """Тест шара в покое на колпаке"""
        d = reduced_vector_field(SystemParams(), ConcaveCap(c=-0.5), ReducedState(x=(0.3, 0.0)))

        assert d.dv[0] == pytest.approx(0.1047852, abs=1e-7)
        assert d.dv[1] == 0.0
        assert d.domega_z == 0.0

    def test_vertex_is_regular(self):
        """Тест отсутствия сингулярности ψ-формы в вершине"""
        d = reduced_vector_field(
            SystemParams(Omega=1.0), ConcaveCap(), ReducedState(x=(0.0, 0.0), omega_z=2.0)
        )
        assert np.allclose(d.as_array(), 0.0)

    def test_non_finite_term(self):
        """Тест нечислового промежуточного значения"""
        broken = Custom(psi_fn=lambda u: (0.0, math.nan, 0.0))
        with pytest.raises(NumericError):
            reduced_vector_field(SystemParams(), broken, ReducedState(x=(0.5, 0.0), v=(0.1, 0.0)))


class TestSymmetry:
    """Тесты для симметрии и гладкости поля при α = 0"""

    @staticmethod
    def _rotate(vec, theta: float) -> tuple[float, float]:
        c, s = math.cos(theta), math.sin(theta)
        return (c * vec[0] - s * vec[1], s * vec[0] + c * vec[1])

    @pytest.mark.parametrize("profile", [
        Flat(),
        Paraboloid(c=0.5),
        ConcaveCap(c=-0.5),
        Quartic(r_max=3.0, c2=-0.5, c4=0.5),
    ])
    @pytest.mark.parametrize("theta", [0.3, 1.7, -2.4, math.pi])
    def test_so2_equivariance(self, profile, theta):
        """Тест: поворот (x, v) на θ поворачивает (ẋ, v̇) на θ, ω̇_z не меняется"""
        p = SystemParams(k=0.3, g_hat=1.4, Omega=0.8)
        st = ReducedState(x=(0.6, -0.9), v=(0.4, 0.25), omega_z=-1.1)
        turned = ReducedState(
            x=self._rotate(st.x, theta), v=self._rotate(st.v, theta), omega_z=st.omega_z
        )

        d = reduced_vector_field(p, profile, st)
        d_turned = reduced_vector_field(p, profile, turned)

        assert np.allclose(d_turned.dx, self._rotate(d.dx, theta), rtol=0.0, atol=1e-12)
        assert np.allclose(d_turned.dv, self._rotate(d.dv, theta), rtol=0.0, atol=1e-12)
        assert d_turned.domega_z == pytest.approx(d.domega_z, abs=1e-12)

    @pytest.mark.parametrize("profile", [
        Paraboloid(c=0.5),
        ConcaveCap(c=-0.5),
        Quartic(r_max=3.0, c2=-0.5, c4=0.5),
        polynomial_profile([0.0, -0.5, 0.5], r_max=3.0),
    ])
    def test_smooth_through_vertex(self, profile):
        """Тест сходимости поля при |x| = 10⁻ᵏ → 0 вдоль луча"""
        p = SystemParams(Omega=0.7)
        direction = (math.cos(0.4), math.sin(0.4))
        v = (0.3, -0.2)
        at_vertex = reduced_vector_field(p, profile, ReducedState(x=(0.0, 0.0), v=v, omega_z=0.5))

        gaps = []
        for k in range(2, 9):
            r = 10.0 ** -k
            st = ReducedState(x=(r * direction[0], r * direction[1]), v=v, omega_z=0.5)
            gap = float(np.max(np.abs(reduced_vector_field(p, profile, st).as_array() - at_vertex.as_array())))
            assert gap <= 10.0 * r
            gaps.append(gap)

        assert gaps[-1] < 1e-7
        assert gaps[-1] < gaps[0]


class TestFForm:
    """Тесты для f-формы уравнений"""

    @pytest.mark.parametrize("profile", [
        Paraboloid(c=0.5),
        ConcaveCap(c=-0.5),
        Quartic(r_max=3.0, c2=-0.5, c4=0.5),
        polynomial_profile([0.0, -0.5, 0.5], r_max=3.0),
    ])
    def test_agrees_with_psi_form(self, profile):
        """Тест совпадения двух форм уравнений"""
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = SystemParams(Omega=rng.uniform(-2.0, 2.0), alpha=rng.uniform(0.0, 0.5))
            r = rng.uniform(0.1, 2.5)
            phi = rng.uniform(0.0, 2.0 * math.pi)
            st = ReducedState(
                x=(r * math.cos(phi), r * math.sin(phi)),
                v=tuple(rng.uniform(-1.0, 1.0, 2)),
                omega_z=rng.uniform(-3.0, 3.0),
            )
            a = reduced_vector_field(p, profile, st).as_array()
            b = vector_field_fform(p, profile, st).as_array()
            assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))

    def test_flat_example(self):
        """Тест f-формы на вращающейся плоскости"""
        d = vector_field_fform(
            SystemParams(Omega=1.0), Flat(), ReducedState(x=(1.0, 0.0), v=(0.0, 1.0))
        )
        assert d.dv[0] == pytest.approx(-2.0 / 7.0)
        assert d.dv[1] == pytest.approx(0.0, abs=1e-15)

    def test_vertex_singularity(self):
        """Тест отказа f-формы в вершине"""
        with pytest.raises(VertexSingularityError):
            vector_field_fform(SystemParams(), ConcaveCap(), ReducedState(x=(0.0, 0.0)))


class TestConstraint:
    """Тесты для условия качения"""

    def test_residual_vanishes(self):
        """Тест нулевой невязки всех трёх компонент"""
        s = Quartic(r_max=3.0, c2=-0.5, c4=0.5)
        rng = np.random.default_rng(11)
        for _ in range(100):
            st = ReducedState(
                x=tuple(rng.uniform(-2.0, 2.0, 2)),
                v=tuple(rng.uniform(-1.0, 1.0, 2)),
                omega_z=rng.uniform(-3.0, 3.0),
            )
            res = constraint_residual(SystemParams(Omega=rng.uniform(-2.0, 2.0)), s, st)
            assert np.max(np.abs(res)) < 1e-12

    def test_z_component(self):
        """Тест третьей компоненты"""
        st = ReducedState(x=(0.4, -0.2), v=(0.3, 0.1), omega_z=1.0)
        assert abs(constraint_residual_z(SystemParams(Omega=0.7), Paraboloid(c=0.5), st)) < 1e-14

    def test_flat_omega(self):
        """Тест ω_x, ω_y на плоскости"""
        wx, wy = constraint_omega(
            SystemParams(Omega=1.0), Flat(), ReducedState(x=(1.0, 2.0), v=(0.5, -0.5))
        )
        assert wx == pytest.approx(0.5 + 1.0)
        assert wy == pytest.approx(0.5 + 2.0)


class TestAttitude:
    """Тесты для ориентации шара"""

    def test_hat_is_cross_product(self):
        """Тест hat(ω)·u = ω × u"""
        w = np.array([0.3, -1.2, 0.7])
        u = np.array([1.0, 2.0, -0.5])
        assert np.allclose(hat(w) @ u, np.cross(w, u))

    def test_attitude_rhs_identity(self):
        """Тест Ṙ = ω̂ при R = I"""
        w = (0.1, 0.2, 0.3)
        assert np.allclose(attitude_rhs(w, np.eye(3)), hat(w))

    def test_full_rhs_size(self):
        """Тест размерности полной системы"""
        y = [0.5, 0.0, 0.0, 0.3, 0.2] + np.eye(3).ravel().tolist()
        assert len(full_rhs(SystemParams(Omega=0.5), Paraboloid(c=0.5), y)) == 14

    def test_rejects_non_rotation(self):
        """Тест отклонения не-вращения"""
        with pytest.raises(PreconditionError):
            FullState(ReducedState(x=(0.0, 0.0)), R=((2.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))
