# APPLICATION/app/config.py

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

# -----------------------------------------------------------------------------
# Загрузка переменных окружения
# -----------------------------------------------------------------------------
load_dotenv()

# -----------------------------------------------------------------------------
# Пути
# -----------------------------------------------------------------------------
HERE     = Path(__file__).resolve().parent
DATA_DIR = HERE / "data"

DEFAULT_TRUNCATION = 20


class ConfigError(ValueError):
    """Некорректное значение переменной окружения."""


@dataclass(frozen=True)
class Settings:
    truncation: int
    tracing: bool
    otlp_endpoint: str | None


def _positive_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a positive integer, got {raw!r}") from None
    if value <= 0:
        raise ConfigError(f"{name} must be a positive integer, got {raw!r}")
    return value


def get_settings() -> Settings:
    """
    Прочитать настройки из окружения (.env подхватывается при импорте модуля).

    Returns:
        Settings: порядок усечения q-рядов и флаг трассировки.

    Raises:
        ConfigError: STABFORGE_TRUNC не положительное целое.
    """
    return Settings(
        truncation=_positive_int("STABFORGE_TRUNC", DEFAULT_TRUNCATION),
        tracing=os.getenv("STABFORGE_TRACING", "0") == "1",
        otlp_endpoint=os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT") or None,
    )
