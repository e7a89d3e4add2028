"""
Kasamawashi — Исключения механического ядра
"""
from typing import Optional


class KasamawashiError(Exception):
    """Базовое исключение пакета"""
    pass


class DomainError(KasamawashiError):
    """Аргумент вне области определения профиля"""

    def __init__(self, value: float, bound: str):
        self.value = value
        self.bound = bound
        super().__init__(f"Value {value!r} outside profile domain ({bound})")


class NumericError(KasamawashiError):
    """Нечисловой промежуточный результат (nan/inf)"""

    def __init__(self, term: str, value: float):
        self.term = term
        self.value = value
        super().__init__(f"Non-finite value in term '{term}': {value!r}")


class VertexSingularityError(KasamawashiError):
    """f-форма уравнений сингулярна в вершине"""
    pass


class NotConservedError(KasamawashiError):
    """Величина не является первым интегралом при данных параметрах"""
    pass


class PreconditionError(KasamawashiError):
    """Нарушено предусловие операции"""
    pass


class EmptyLevelSetError(KasamawashiError):
    """Множество уровня энергии пусто (E0 + C < 0)"""

    def __init__(self, E0: float, C: float):
        self.E0 = E0
        self.C = C
        super().__init__(f"Empty level set: E0 + C = {E0 + C!r} < 0")


class StepSizeUnderflowError(KasamawashiError):
    """Шаг интегратора стал меньше допустимого"""

    def __init__(self, t: float, h: float, state: Optional[list] = None):
        self.t = t
        self.h = h
        self.state = state
        super().__init__(f"Step size underflow at t={t!r} (h={h!r})")
