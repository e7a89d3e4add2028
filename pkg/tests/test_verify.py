"""
Тесты для набора проверок verify
"""

import numpy as np
import pytest

from src.core.config import HaltReason
from src.interfaces.verify import (
    ENERGY_T_END,
    SEED,
    _energy_runs,
    _equilibrium_cases,
    _random_params,
    check_energy,
    check_energy_bounds,
)


class TestEnergySuite:
    """Тесты для проверки сохранения энергии"""

    def test_runs_reach_end_time(self):
        """Тест: каждая траектория доходит до t = 100 без выхода из области"""
        runs = list(_energy_runs())

        assert len(runs) == 9
        for p, s, traj in runs:
            assert traj.halt_reason == HaltReason.COMPLETED, (s.kind, p.Omega)
            assert traj.times[-1] == ENERGY_T_END

    def test_energy_passes(self):
        """Тест прохождения проверки дрейфа энергии"""
        result = check_energy()

        assert result.ok, result.details
        assert "stopped" not in result.details

    def test_bounds_pass(self):
        """Тест оценок |v| и |ω_z| на тех же траекториях"""
        result = check_energy_bounds()
        assert result.ok, result.details


class TestRandomParams:
    """Тесты для случайных параметров проверок"""

    def test_params_cover_range(self):
        """Тест: k ∈ (0, 1) и ĝ > 0 меняются от набора к набору"""
        rng = np.random.default_rng(SEED)
        draws = [_random_params(rng, alpha_max=0.5) for _ in range(200)]
        ks = [p.k for p in draws]
        gs = [p.g_hat for p in draws]

        assert all(0.0 < k < 1.0 for k in ks)
        assert all(g > 0.0 for g in gs)
        assert max(ks) - min(ks) > 0.5
        assert max(gs) - min(gs) > 1.5
        assert all(0.0 <= p.alpha <= 0.5 for p in draws)

    def test_zero_alpha_by_default(self):
        """Тест: без alpha_max наклон нулевой"""
        p = _random_params(np.random.default_rng(SEED))
        assert p.alpha == 0.0

    def test_equilibrium_cases_vary_k(self):
        """Тест: равновесия для линеаризации берутся при разных k и ĝ"""
        cases = _equilibrium_cases(np.random.default_rng(SEED + 3))
        ks = {round(p.k, 12) for p, _, _ in cases}
        gs = {round(p.g_hat, 12) for p, _, _ in cases}

        assert len(cases) > 0
        assert len(ks) > 1
        assert len(gs) > 1
        assert all(0.0 < k < 1.0 for k in ks)

    @pytest.mark.parametrize("alpha_max", [0.0, 0.5])
    def test_params_valid(self, alpha_max):
        """Тест: случайные параметры проходят валидацию SystemParams"""
        rng = np.random.default_rng(SEED + 1)
        for _ in range(50):
            p = _random_params(rng, alpha_max=alpha_max)
            assert p.mu == pytest.approx(p.k / (1.0 + p.k))
