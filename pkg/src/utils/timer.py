from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from time import perf_counter
from typing import Iterator


class TimerError(RuntimeError):
    """Raised when timer is used before start()."""


@dataclass(frozen=True)
class Lap:
    """One timed pipeline stage."""

    name: str
    delta: float  # seconds spent in the stage
    total: float  # seconds since timer start


class Timer:
    """
    Замер этапов пайплайна (векторизация, обучение, оценка) для логов sweep.

        timer = Timer().start()
        with timer.step("fit_tfidf"):
            ...
        logger.info("\\n%s", format_summary(timer.summary()))

    В артефакты время не пишется: файлы результатов должны быть побайтно
    воспроизводимы.
    """

    def __init__(self) -> None:
        self._start_at: float | None = None
        self._laps: list[Lap] = []

    def start(self) -> "Timer":
        self._start_at = perf_counter()
        self._laps.clear()
        return self

    @contextmanager
    def step(self, name: str) -> Iterator[None]:
        started = self._started()
        begin = perf_counter()
        try:
            yield
        finally:
            now = perf_counter()
            self._laps.append(Lap(name=name, delta=now - begin, total=now - started))

    def summary(self, precision: int = 1) -> list[dict[str, float | str]]:
        """Метки в миллисекундах, округлённые до precision знаков."""
        return [
            {
                "name": lap.name,
                "delta_ms": round(lap.delta * 1000, precision),
                "total_ms": round(lap.total * 1000, precision),
            }
            for lap in self._laps
        ]

    def _started(self) -> float:
        if self._start_at is None:
            raise TimerError("Timer is not running; call start() first.")
        return self._start_at


def _humanize_ms(value_ms: float) -> str:
    if value_ms < 1000:
        return f"{value_ms:.1f}ms"
    sec = value_ms / 1000
    if sec < 60:
        return f"{sec:.3f}s"
    minutes, seconds = divmod(sec, 60)
    if minutes < 60:
        return f"{int(minutes)}m {seconds:05.2f}s"
    hours, minutes = divmod(minutes, 60)
    return f"{int(hours)}h {int(minutes):02d}m {seconds:05.2f}s"


def format_summary(summary: list[dict]) -> str:
    """
    01. fit_tfidf  Δ=  10.5ms  Σ=  10.5ms
    02. train      Δ=2.031s    Σ=2.042s
    """
    if not summary:
        return ""
    rows = [
        (str(lap.get("name", "")), _humanize_ms(float(lap["delta_ms"])), _humanize_ms(float(lap["total_ms"])))
        for lap in summary
    ]
    name_width = max(len(r[0]) for r in rows)
    delta_width = max(len(r[1]) for r in rows)
    total_width = max(len(r[2]) for r in rows)
    return "\n".join(
        f"{idx:02d}. {name:<{name_width}}  Δ={delta:>{delta_width}}  Σ={total:>{total_width}}"
        for idx, (name, delta, total) in enumerate(rows, start=1)
    )


__all__ = ["Lap", "Timer", "TimerError", "format_summary"]
