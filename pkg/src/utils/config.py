from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

_loaded = False

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


class ConfigError(ValueError):
    """Malformed config file line or a value that does not parse."""


def _strip_quotes(val: str) -> str:
    # убираем кавычки по краям, если есть
    if len(val) >= 2 and val[0] == val[-1] and val[0] in ("'", '"'):
        return val[1:-1]
    return val


def load_dotenv(path: str | Path | None = None) -> None:
    """
    Минималистичный загрузчик .env для настроек логирования.
    - Читает .env в корне репо (или переданный path).
    - Не перезаписывает уже выставленные переменные окружения.
    Параметры экспериментов отсюда не читаются: только config-файл и флаги CLI.
    """
    global _loaded
    if _loaded:
        return

    base_dir = Path(__file__).resolve().parents[2]
    env_path = Path(path) if path else base_dir / ".env"
    if not env_path.exists():
        _loaded = True
        return

    for line in env_path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, val = line.split("=", 1)
        key, val = key.strip(), _strip_quotes(val.strip())
        if key and key not in os.environ:
            os.environ[key] = val

    _loaded = True


def env_get(key: str, default=None):
    """Читает переменную окружения (с учётом .env). Только для LOG_* настроек."""
    load_dotenv()
    return os.getenv(key, default)


def parse_config_text(text: str, source: str = "<string>") -> dict[str, dict[str, str]]:
    """
    Parses the `.env`-style format extended with `[section]` headers.

    Keys before the first header go to section `run`. Later duplicates win.
    """
    sections: dict[str, dict[str, str]] = {"run": {}}
    current = "run"
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"Bad section header at {source}:{line_number}: {raw!r}")
            current = line[1:-1].strip().lower()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"Expected KEY=VALUE at {source}:{line_number}: {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise ConfigError(f"Empty key at {source}:{line_number}")
        sections[current][key] = _strip_quotes(val.strip())
    return sections


@dataclass
class ExperimentConfig:
    """Section → key → raw string. Typed getters parse on access."""

    sections: dict[str, dict[str, str]] = field(default_factory=lambda: {"run": {}})
    source: Path | None = None

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def set(self, section: str, key: str, value: Any) -> None:
        self.sections.setdefault(section, {})[key] = str(value)

    def get_str(self, section: str, key: str, default: str | None = None) -> str | None:
        value = self.sections.get(section, {}).get(key)
        if value is None or value == "":
            return default
        return value

    def get_int(self, section: str, key: str, default: int | None = None) -> int | None:
        value = self.get_str(section, key)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: expected integer, got {value!r}") from exc

    def get_float(self, section: str, key: str, default: float | None = None) -> float | None:
        value = self.get_str(section, key)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: expected number, got {value!r}") from exc

    def get_bool(self, section: str, key: str, default: bool = False) -> bool:
        value = self.get_str(section, key)
        if value is None:
            return default
        lowered = value.strip().lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{section}.{key}: expected boolean, got {value!r}")

    def get_list(self, section: str, key: str, default: Iterable[str] = ()) -> list[str]:
        value = self.get_str(section, key)
        if value is None:
            return list(default)
        return [item.strip() for item in value.split(",") if item.strip()]

    def get_range(self, section: str, key: str, default: tuple[int, int]) -> tuple[int, int]:
        value = self.get_str(section, key)
        if value is None:
            return default
        return parse_range(value, f"{section}.{key}")

    def as_dict(self) -> dict[str, dict[str, str]]:
        return {name: dict(sorted(values.items())) for name, values in sorted(self.sections.items())}


def parse_range(value: str, where: str = "range") -> tuple[int, int]:
    """'1-3' → (1, 3); '2' → (2, 2)."""
    parts = [p.strip() for p in value.split("-")]
    try:
        if len(parts) == 1:
            low = high = int(parts[0])
        elif len(parts) == 2:
            low, high = int(parts[0]), int(parts[1])
        else:
            raise ValueError(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected 'low-high', got {value!r}") from exc
    return low, high


def load_config(path: str | Path) -> ExperimentConfig:
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    text = config_path.read_text(encoding="utf-8-sig")
    return ExperimentConfig(sections=parse_config_text(text, str(config_path)), source=config_path)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_hash(mapping: Any) -> str:
    """16 hex chars of sha256 over canonical JSON."""
    return hashlib.sha256(canonical_json(mapping).encode("utf-8")).hexdigest()[:16]


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "canonical_json",
    "config_hash",
    "env_get",
    "load_config",
    "load_dotenv",
    "parse_config_text",
    "parse_range",
]
