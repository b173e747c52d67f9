from __future__ import annotations

import logging
import sys
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Iterator

from .config import env_get, load_dotenv

_hook_installed = False
_DEFAULT_ROOT = "emo"


def setup_logging(
    level: str | None = None,
    log_dir: str | Path | None = None,
    root_name: str | None = None,
    install_excepthook: bool = False,
) -> logging.Logger:
    """
    Инициализирует логгер проекта (stderr + файл).

    Args:
        level: уровень логирования. По умолчанию LOG_LEVEL или INFO.
        log_dir: каталог для логов. По умолчанию LOG_DIR или <repo>/artifacts/logs.
        root_name: корневое имя логгера. По умолчанию LOG_ROOT или 'emo'.
    Returns:
        Logger с именем <root_name>.

    Консольный вывод идёт в stderr: stdout занят результатами команд CLI.
    """
    load_dotenv()
    root = root_name or env_get("LOG_ROOT", _DEFAULT_ROOT)
    if getattr(setup_logging, "_configured", False):
        logger = logging.getLogger(root)
        if level:
            logger.setLevel(level.upper())
        if install_excepthook:
            _install_excepthook(logger)
        return logger

    level_name = (level or env_get("LOG_LEVEL", "INFO")).upper()

    base_dir = Path(__file__).resolve().parents[2]
    target_dir = Path(log_dir or env_get("LOG_DIR", base_dir / "artifacts" / "logs"))
    target_dir.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    logfile = target_dir / f"run-{timestamp}.log"

    fmt = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s %(message)s")

    logger = logging.getLogger(root)
    logger.setLevel(level_name)
    logger.propagate = False

    file_handler = logging.FileHandler(logfile, encoding="utf-8")
    file_handler.setFormatter(fmt)
    logger.addHandler(file_handler)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(fmt)
    logger.addHandler(stream_handler)

    logger.log_file = logfile  # type: ignore[attr-defined]

    setup_logging._configured = True  # type: ignore[attr-defined]

    if install_excepthook:
        _install_excepthook(logger)
    return logger


def get_logger(name: str) -> logging.Logger:
    """Возвращает дочерний логгер <root>.<name>."""
    root = env_get("LOG_ROOT", _DEFAULT_ROOT)
    setup_logging(root_name=root)
    return logging.getLogger(f"{root}.{name}")


@contextmanager
def log_scope(logger: logging.Logger, name: str) -> Iterator[None]:
    """Пишет INFO на входе в этап и exception с трейсбеком при падении."""
    logger.info("%s", name)
    try:
        yield
    except Exception:
        logger.exception("%s failed", name)
        raise


def _install_excepthook(logger: logging.Logger) -> None:
    global _hook_installed
    if _hook_installed:
        return

    orig_hook = sys.excepthook

    def _hook(exc_type, exc, tb):
        try:
            logger.exception("Uncaught exception", exc_info=(exc_type, exc, tb))
        finally:
            orig_hook(exc_type, exc, tb)

    sys.excepthook = _hook
    _hook_installed = True


__all__ = ["get_logger", "log_scope", "setup_logging"]
