# APPLICATION/stab_core/errors.py

"""Иерархия исключений библиотеки.

Все ошибки наследуют ``ValueError``, поэтому внешний код, ловящий
``ValueError`` (как и раньше в сервисах), продолжает работать.
"""


class StabforgeError(ValueError):
    """Базовая ошибка stabforge."""


class AlgebraError(StabforgeError):
    """Ошибки точной арифметики: пустой многогранник, неквадратный радикал и т.п."""


class GeometryError(StabforgeError):
    """Ошибки решёточной геометрии: не грань, вырожденная камера или многогранник."""


class ModelError(StabforgeError):
    """Некорректная GKM-модель (поляризация, рёбра, имена)."""


class SolverError(StabforgeError):
    """Интерполяция невозможна. ``pair`` — пара неподвижных точек (j, i), если известна."""

    def __init__(self, message: str, pair: tuple[str, str] | None = None):
        if pair is not None:
            message = f"{message} (pair {pair[0]} <- {pair[1]})"
        super().__init__(message)
        self.pair = pair


class ResonanceError(StabforgeError):
    """Параметр Кэлера попал в резонансное множество."""


class DegenerationError(StabforgeError):
    """Вырожденная 𝒬, несогласованные компоненты, предел не существует."""
