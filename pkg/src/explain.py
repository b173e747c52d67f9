"""
Local word-level explanations of one decision score (LIME over word presence).

Masks switch distinct words on and off, masked words are deleted everywhere in
the text, the model scores every perturbed text, and a proximity-weighted ridge
fit attributes the score to the words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from .corpus import EMOTIONS, preprocess
from .utils.documents import read_document, write_document
from .utils.logging_utils import get_logger

logger = get_logger("explain")

_SCORE_CHUNK = 512


class ExplainError(ValueError):
    """The instance cannot be explained (empty text, unknown label, unsolvable local fit)."""


class Scorer(Protocol):
    def decision_scores(self, texts: Sequence[str], label: str) -> np.ndarray: ...


@dataclass(frozen=True)
class LimeConfig:
    num_samples: int = 1000
    num_features: int = 10
    kernel_width: float | None = None  # None → 0.75·√W
    ridge_alpha: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ExplainError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.num_features < 1:
            raise ExplainError(f"num_features must be >= 1, got {self.num_features}")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ExplainError(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.ridge_alpha <= 0:
            raise ExplainError(f"ridge_alpha must be > 0, got {self.ridge_alpha}")

    def as_dict(self) -> dict:
        return {
            "num_samples": self.num_samples,
            "num_features": self.num_features,
            "kernel_width": self.kernel_width,
            "ridge_alpha": self.ridge_alpha,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class InterpretableInstance:
    text: str
    tokens: tuple[str, ...]  # preprocessed tokens in text order
    distinct_words: tuple[str, ...]  # first-occurrence order
    original_score: float = 0.0

    @classmethod
    def from_text(cls, text: str) -> "InterpretableInstance":
        tokens = tuple(preprocess(text).split())
        if not tokens:
            raise ExplainError("text is empty after preprocessing")
        return cls(text=text, tokens=tokens, distinct_words=tuple(dict.fromkeys(tokens)))

    @property
    def width(self) -> int:
        return len(self.distinct_words)

    def realize(self, mask: np.ndarray) -> str:
        """Text with every occurrence of a masked-out word removed."""
        kept = {word for word, keep in zip(self.distinct_words, mask) if keep}
        return " ".join(token for token in self.tokens if token in kept)


@dataclass(frozen=True)
class Explanation:
    label: str
    features: tuple[tuple[str, float], ...]  # ranked by |weight|, largest first
    intercept: float
    local_fit_score: float
    num_samples: int
    seed: int
    text: str
    original_score: float
    config: dict

    def to_payload(self) -> dict:
        return {
            "label": self.label,
            "features": [[word, float(weight)] for word, weight in self.features],
            "intercept": float(self.intercept),
            "local_fit_score": float(self.local_fit_score),
            "num_samples": self.num_samples,
            "seed": self.seed,
            "text": self.text,
            "original_score": float(self.original_score),
            "config": self.config,
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "Explanation":
        return cls(
            label=str(payload["label"]),
            features=tuple((str(w), float(v)) for w, v in payload["features"]),
            intercept=float(payload["intercept"]),
            local_fit_score=float(payload["local_fit_score"]),
            num_samples=int(payload["num_samples"]),
            seed=int(payload["seed"]),
            text=str(payload["text"]),
            original_score=float(payload["original_score"]),
            config=dict(payload["config"]),
        )


def sample_masks(width: int, num_samples: int, rng: np.random.Generator) -> np.ndarray:
    """
    num_samples × width boolean masks. Row 0 keeps every word; every other row
    removes r words, r uniform in [1, width], chosen uniformly without replacement.
    """
    if width < 1:
        raise ExplainError("cannot sample masks over zero words")
    masks = np.ones((num_samples, width), dtype=bool)
    for row in range(1, num_samples):
        removed = int(rng.integers(1, width + 1))
        masks[row, rng.choice(width, size=removed, replace=False)] = False
    return masks


def proximity_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    """exp(−D²/w²), D = cosine distance to the all-ones mask (1 for an empty mask)."""
    width = masks.shape[1]
    distance = 1.0 - np.sqrt(masks.sum(axis=1) / width)
    return np.exp(-(distance**2) / kernel_width**2)


def weighted_ridge(Z: np.ndarray, y: np.ndarray, weights: np.ndarray, alpha: float = 1.0) -> tuple[np.ndarray, float]:
    """
    argmin Σ π_i (y_i − b − z_i·β)² + α‖β‖²; the intercept b is not penalized.
    Returns (β, b).
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ExplainError("proximity weights sum to zero")
    z_mean = weights @ Z / total
    y_mean = float(weights @ y / total)
    Zc = Z - z_mean
    yc = y - y_mean
    A = Zc.T @ (Zc * weights[:, None]) + alpha * np.eye(Z.shape[1])
    b = Zc.T @ (weights * yc)
    coef = linalg.solve(A, b, assume_a="pos")
    residual = np.linalg.norm(A @ coef - b)
    if residual > 1e-10 * max(1.0, np.linalg.norm(b)):
        raise ExplainError(f"ridge system solved with residual {residual:.3g}")
    return coef, y_mean - float(z_mean @ coef)


def weighted_r2(Z: np.ndarray, y: np.ndarray, weights: np.ndarray, coef: np.ndarray, intercept: float) -> float:
    fitted = Z @ coef + intercept
    y_mean = weights @ y / weights.sum()
    ss_res = float(weights @ (y - fitted) ** 2)
    ss_tot = float(weights @ (y - y_mean) ** 2)
    if ss_tot <= 0.0 or np.ptp(y) == 0.0:
        return 1.0
    return float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))


def _score_texts(model: Scorer, texts: list[str], label: str, n_jobs: int) -> np.ndarray:
    chunks = [texts[i : i + _SCORE_CHUNK] for i in range(0, len(texts), _SCORE_CHUNK)]
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(model.decision_scores)(chunk, label) for chunk in chunks)
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


def explain_instance(
    model: Scorer,
    text: str,
    label: str,
    config: LimeConfig | None = None,
    n_jobs: int = 1,
) -> Explanation:
    config = config or LimeConfig()
    if label not in EMOTIONS:
        raise ExplainError(f"Unknown emotion label {label!r}; expected one of {EMOTIONS}")
    instance = InterpretableInstance.from_text(text)
    width = instance.width
    rng = np.random.default_rng(config.seed)
    masks = sample_masks(width, config.num_samples, rng)
    # row 0 keeps every word: score the text exactly as given
    perturbed = [text] + [instance.realize(mask) for mask in masks[1:]]
    scores = _score_texts(model, perturbed, label, n_jobs)
    instance = replace(instance, original_score=float(scores[0]))

    kernel_width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(width)
    weights = proximity_weights(masks, kernel_width)
    Z = masks.astype(float)

    full_coef, _ = weighted_ridge(Z, scores, weights, config.ridge_alpha)
    k = min(config.num_features, width)
    selected = np.argsort(-np.abs(full_coef), kind="stable")[:k]
    coef, intercept = weighted_ridge(Z[:, selected], scores, weights, config.ridge_alpha)
    fit = weighted_r2(Z[:, selected], scores, weights, coef, intercept)

    ranking = np.argsort(-np.abs(coef), kind="stable")
    features = tuple((instance.distinct_words[selected[i]], float(coef[i])) for i in ranking)
    logger.info(
        "Explained %s over %d word(s) with %d sample(s): local fit %.3f",
        label, width, config.num_samples, fit,
    )
    return Explanation(
        label=label,
        features=features,
        intercept=float(intercept),
        local_fit_score=fit,
        num_samples=config.num_samples,
        seed=config.seed,
        text=text,
        original_score=instance.original_score,
        config={**config.as_dict(), "kernel_width_used": kernel_width},
    )


def render_explanation(explanation: Explanation, bar_width: int = 30) -> str:
    """
    anger (score +0.8123, local fit 0.912)
      রাগ       +0.4521 ██████████████████████████████
      খুব       -0.0311 ▒▒
    """
    verdict = "" if explanation.original_score > 0 else "not "
    lines = [
        f"{verdict}{explanation.label} (score {explanation.original_score:+.4f}, "
        f"local fit {explanation.local_fit_score:.3f})"
    ]
    if not explanation.features:
        return lines[0]
    scale = max(abs(weight) for _, weight in explanation.features) or 1.0
    word_width = max(len(word) for word, _ in explanation.features)
    for word, weight in explanation.features:
        bar = ("█" if weight > 0 else "▒") * round(bar_width * abs(weight) / scale)
        lines.append(f"  {word:<{word_width}}  {weight:+.4f} {bar}")
    return "\n".join(lines)


def save_explanation(explanation: Explanation, path: str | Path, meta: Mapping[str, Any] | None = None) -> Path:
    return write_document(path, "explanation", {**(meta or {}), **explanation.to_payload()})


def load_explanation(path: str | Path) -> Explanation:
    return Explanation.from_payload(read_document(path, "explanation"))


__all__ = [
    "ExplainError",
    "Explanation",
    "InterpretableInstance",
    "LimeConfig",
    "Scorer",
    "explain_instance",
    "load_explanation",
    "proximity_weights",
    "render_explanation",
    "sample_masks",
    "save_explanation",
    "weighted_ridge",
    "weighted_r2",
]
