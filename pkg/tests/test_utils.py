"""
Тесты для утилит
"""

import asyncio
import json
import math
from pathlib import Path

import pytest

from src.core.config import ProbeDirection, ProfileKind
from src.mechanics.profile import ConcaveCap, TruncatedCone
from src.utils.decorators import measure_time
from src.utils.validators import (
    ValidationError,
    load_scenario,
    read_scenario_json,
    scenario_to_dict,
    validate_scenario,
    write_scenario,
)

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"


def _scenario(**overrides):
    data = {
        "profile": {"kind": "concave_cap", "c": -0.5},
        "params": {"k": 0.4, "g_hat": 1.0, "Omega": 0.0, "alpha": 0.0},
        "initial_state": {"x": [0.3, 0.0], "v": [0.0, 0.0], "omega_z": 0.0},
    }
    data.update(overrides)
    return data


class TestScenarioValidation:
    """Тесты для валидации сценариев"""

    def test_valid_scenario(self):
        """Тест валидного сценария"""
        scenario = validate_scenario(_scenario())

        assert scenario.profile.kind == ProfileKind.CONCAVE_CAP
        assert scenario.build_params().gamma == pytest.approx(5.0 / 7.0)
        assert scenario.build_profile() == ConcaveCap(c=-0.5)
        assert scenario.build_initial_state().x == (0.3, 0.0)

    def test_all_errors_collected(self):
        """Тест сбора всех нарушений"""
        data = _scenario(params={"k": 1.5, "g_hat": -1.0, "alpha": 2.0})
        with pytest.raises(ValidationError) as exc:
            validate_scenario(data)

        messages = exc.value.messages
        assert "params.k: k must lie in (0,1)" in messages
        assert "params.g_hat: g_hat must be positive" in messages
        assert "params.alpha: alpha must lie in [0, pi/2)" in messages

    def test_unknown_key(self):
        """Тест неизвестного ключа"""
        with pytest.raises(ValidationError) as exc:
            validate_scenario(_scenario(solver="rk4"))
        assert any(m.startswith("solver") for m in exc.value.messages)

    def test_degrees_rejected(self):
        """Тест углов в градусах"""
        data = _scenario(params={"alpha_deg": 30.0})
        with pytest.raises(ValidationError) as exc:
            validate_scenario(data)
        assert "params.alpha_deg: angles are accepted in radians only" in exc.value.messages

    def test_profile_keys_by_kind(self):
        """Тест ключей, не относящихся к виду профиля"""
        with pytest.raises(ValidationError) as exc:
            validate_scenario(_scenario(profile={"kind": "flat", "c": 1.0}))
        assert any("key 'c' is not used by profile kind 'flat'" in m for m in exc.value.messages)

    def test_cone_needs_slope(self):
        """Тест конуса без наклона"""
        with pytest.raises(ValidationError):
            validate_scenario(_scenario(profile={"kind": "cone", "delta": 0.1}))

    def test_cone_profile(self):
        """Тест сборки конуса"""
        scenario = validate_scenario(_scenario(profile={"kind": "cone", "slope": 0.5, "delta": 0.1}))
        assert scenario.build_profile() == TruncatedCone(slope=0.5, delta=0.1)

    def test_custom_profile(self):
        """Тест полиномиального профиля"""
        scenario = validate_scenario(
            _scenario(profile={"kind": "custom", "psi": [0.0, -0.5, 0.5], "r_max": 3.0})
        )
        assert scenario.build_profile().f_jet(1.0).f1 == pytest.approx(0.0, abs=1e-15)

    def test_custom_profile_offset(self):
        """Тест ψ(0) ≠ 0"""
        with pytest.raises(ValidationError):
            validate_scenario(_scenario(profile={"kind": "custom", "psi": [1.0, 0.5]}))

    def test_irregular_profile(self):
        """Тест профиля, нарушающего регулярность"""
        scenario = validate_scenario(_scenario(profile={"kind": "paraboloid", "c": -2.0}))
        with pytest.raises(ValidationError):
            scenario.build_profile()

    def test_not_an_object(self):
        """Тест сценария не-объекта"""
        with pytest.raises(ValidationError):
            validate_scenario([1, 2, 3])

    def test_integrator_defaults(self):
        """Тест настроек интегратора по умолчанию"""
        cfg = validate_scenario(_scenario()).build_integrator()
        assert cfg.rel_tol == 1e-10
        assert math.isinf(cfg.max_step)

    def test_output_step_bound(self):
        """Тест шага вывода больше t_end"""
        with pytest.raises(ValidationError):
            validate_scenario(_scenario(integrator={"t_end": 1.0, "dense_output_dt": 2.0}))

    def test_missing_initial_state(self):
        """Тест отсутствия начального состояния"""
        data = _scenario()
        del data["initial_state"]
        with pytest.raises(ValidationError):
            validate_scenario(data).build_initial_state()

    def test_probe_section(self):
        """Тест секции пробы"""
        scenario = validate_scenario(_scenario(probe={"omega_z": 8.2, "which": "Unstable"}))
        assert scenario.probe.which == ProbeDirection.UNSTABLE

    def test_sweep_range(self):
        """Тест диапазона развёртки"""
        with pytest.raises(ValidationError):
            validate_scenario(_scenario(sweep={"omega_z_range": [1.0, -1.0, 11]}))


class TestScenarioFiles:
    """Тесты для чтения и записи сценариев"""

    def test_roundtrip(self, tmp_path):
        """Тест записи и повторного чтения"""
        path = tmp_path / "scenario.json"
        write_scenario(validate_scenario(_scenario()), path)
        again = load_scenario(path)
        assert scenario_to_dict(again)["profile"] == {"kind": "concave_cap", "r_max": 10.0, "c": -0.5}

    def test_parse_error_position(self, tmp_path):
        """Тест номера строки и столбца при ошибке разбора"""
        path = tmp_path / "broken.json"
        path.write_text('{\n  "profile": {"kind": "flat",}\n}\n', encoding="utf-8")
        with pytest.raises(ValidationError) as exc:
            read_scenario_json(path)
        assert "line 2" in exc.value.messages[0]

    def test_missing_file(self, tmp_path):
        """Тест отсутствующего файла"""
        with pytest.raises(ValidationError):
            read_scenario_json(tmp_path / "missing.json")

    def test_shipped_configs(self):
        """Тест поставляемых сценариев"""
        paths = sorted(CONFIGS_DIR.glob("*.json"))
        assert paths
        for path in paths:
            data = json.loads(path.read_text(encoding="utf-8"))
            validate_scenario(data).build_profile()


class TestMeasureTime:
    """Тесты для декоратора замера времени"""

    def test_sync(self):
        """Тест синхронной функции"""

        @measure_time
        def add(a, b):
            return a + b

        assert add(2, 3) == 5
        assert add.__name__ == "add"

    def test_sync_error(self):
        """Тест проброса исключения"""

        @measure_time
        def broken():
            raise KeyError("x")

        with pytest.raises(KeyError):
            broken()

    def test_async(self):
        """Тест асинхронной функции"""

        @measure_time
        async def double(x):
            await asyncio.sleep(0)
            return 2 * x

        assert asyncio.iscoroutinefunction(double)
        assert asyncio.run(double(21)) == 42
