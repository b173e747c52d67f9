"""
PCA for TF-IDF matrices.

Small widths use the exact eigendecomposition of the covariance. Wide sparse
matrices never get densified: the mean is carried separately and the top-k
subspace comes from seeded block subspace iteration with a Rayleigh-Ritz step,
widened step by step until the variance threshold is covered.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import linalg, sparse

from .features import DimensionMismatchError, SparseVector
from .utils.documents import content_id, read_document, write_document
from .utils.logging_utils import get_logger

logger = get_logger("decomp")

# first width tried by the iterative path when k comes from the variance threshold
INITIAL_WIDTH = 32


class DegenerateCovarianceError(ValueError):
    """All rows are identical, so there is no variance to decompose."""


@dataclass(frozen=True)
class PcaConfig:
    n_components: int | None = None  # None → smallest k reaching variance_threshold
    variance_threshold: float = 0.95
    max_components: int = 300
    dense_max_dim: int = 512
    oversample: int = 10
    tol: float = 1e-9
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_components is not None and self.n_components < 1:
            raise ValueError(f"n_components must be >= 1, got {self.n_components}")
        if not 0.0 < self.variance_threshold <= 1.0:
            raise ValueError(f"variance_threshold must be in (0, 1], got {self.variance_threshold}")
        if self.max_components < 1:
            raise ValueError(f"max_components must be >= 1, got {self.max_components}")

    def as_dict(self) -> dict:
        return {
            "n_components": self.n_components,
            "variance_threshold": self.variance_threshold,
            "max_components": self.max_components,
            "dense_max_dim": self.dense_max_dim,
            "oversample": self.oversample,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing
    total_variance: float
    n_samples: int
    method: str  # "dense" | "iterative"

    def __post_init__(self) -> None:
        for arr in (self.mean, self.components, self.explained_variance):
            arr.setflags(write=False)

    @property
    def k(self) -> int:
        return int(self.components.shape[0])

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def explained_fraction(self) -> float:
        return float(self.explained_variance.sum() / self.total_variance)

    def to_payload(self) -> dict:
        return {
            "mean": self.mean,
            "components": self.components,
            "explained_variance": self.explained_variance,
            "total_variance": float(self.total_variance),
            "n_samples": self.n_samples,
            "method": self.method,
        }

    @classmethod
    def from_payload(cls, payload: Mapping) -> "PcaModel":
        mean = np.array(payload["mean"], dtype=float)
        components = np.array(payload["components"], dtype=float).reshape(-1, mean.shape[0])
        return cls(
            mean=mean,
            components=components,
            explained_variance=np.array(payload["explained_variance"], dtype=float),
            total_variance=float(payload["total_variance"]),
            n_samples=int(payload["n_samples"]),
            method=str(payload["method"]),
        )

    @property
    def model_id(self) -> str:
        return content_id(self.to_payload())


def choose_components(
    explained_variance: np.ndarray,
    total_variance: float,
    threshold: float = 0.95,
    cap: int = 300,
) -> int:
    """Smallest k whose cumulative explained share reaches `threshold`, capped."""
    ev = np.asarray(explained_variance, dtype=float)
    if ev.size == 0:
        raise ValueError("explained_variance is empty")
    shares = np.cumsum(ev) / total_variance
    reached = np.nonzero(shares >= threshold - 1e-12)[0]
    k = int(reached[0]) + 1 if reached.size else int(ev.size)
    return max(1, min(k, cap))


def _column_stats(X) -> tuple[np.ndarray, float, bool]:
    """(mean, total sample variance, any column varies)."""
    n = X.shape[0]
    if sparse.issparse(X):
        mean = np.asarray(X.mean(axis=0)).ravel()
        squares = float(X.multiply(X).sum())
        varies = bool(np.any(X.max(axis=0).toarray() != X.min(axis=0).toarray()))
    else:
        mean = X.mean(axis=0)
        squares = float(np.einsum("ij,ij->", X, X))
        varies = bool(np.any(X.max(axis=0) != X.min(axis=0)))
    total = max((squares - n * float(mean @ mean)) / (n - 1), 0.0)
    return mean, total, varies


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude coordinate is positive."""
    out = vectors.copy()
    pivots = np.argmax(np.abs(out), axis=1)
    signs = np.sign(out[np.arange(out.shape[0]), pivots])
    signs[signs == 0] = 1.0
    return out * signs[:, None]


def _dense_eigen(X, mean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dense = X.toarray() if sparse.issparse(X) else np.asarray(X, dtype=float)
    centered = dense - mean
    cov = centered.T @ centered / (dense.shape[0] - 1)
    values, vectors = linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    return np.clip(values[order], 0.0, None), vectors[:, order].T


def _covariance_operator(X, mean: np.ndarray):
    n = X.shape[0]

    def apply(block: np.ndarray) -> np.ndarray:
        product = np.asarray(X.T @ (X @ block))
        return (product - n * np.outer(mean, mean @ block)) / (n - 1)

    return apply


def _subspace_change(previous: np.ndarray, current: np.ndarray) -> float:
    """Sine of the largest principal angle between two orthonormal d×k bases, from k×k cosines."""
    cosines = linalg.svdvals(previous.T @ current)
    return float(np.sqrt(max(1.0 - float(cosines.min()) ** 2, 0.0)))


def _subspace_iteration(
    X,
    mean: np.ndarray,
    k: int,
    config: PcaConfig,
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Top-k Ritz pairs of the covariance. `start` (d×m orthonormal, m < block)
    seeds the first columns of the block.

    Stops when the subspace angle or the largest Ritz value change relative
    to the leading value drops to `tol`.
    """
    d = X.shape[1]
    block = min(k + config.oversample, d)
    apply = _covariance_operator(X, mean)
    rng = np.random.default_rng(config.seed)
    initial = rng.standard_normal((d, block))
    if start is not None:
        initial[:, : start.shape[1]] = start
    Q, _ = linalg.qr(initial, mode="economic")
    previous: tuple[np.ndarray, np.ndarray] | None = None
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        Z = apply(Q)
        H = Q.T @ Z
        values, vectors = linalg.eigh((H + H.T) / 2)
        order = np.argsort(values)[::-1][:k]
        ritz = values[order]
        U = Q @ vectors[:, order]
        if previous is not None:
            last_U, last_ritz = previous
            drift = float(np.max(np.abs(ritz - last_ritz))) / max(float(ritz[0]), np.finfo(float).tiny)
            if drift <= config.tol or _subspace_change(last_U, U) <= config.tol:
                break
        previous = (U, ritz)
        Q, _ = linalg.qr(Z, mode="economic")
    else:
        logger.warning("Subspace iteration stopped at max_iter=%d without reaching tol=%g", config.max_iter, config.tol)
    variances = np.clip(np.einsum("ij,ij->j", U, apply(U)), 0.0, None)
    order = np.argsort(variances, kind="stable")[::-1]
    return variances[order], U[:, order].T, iterations


def _grow_until_threshold(X, mean: np.ndarray, total: float, config: PcaConfig) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Doubles the solved width from INITIAL_WIDTH until the Ritz values cover
    variance_threshold of the total (or the cap is hit). Ritz values never
    exceed the true eigenvalues, so the final k never needs a wider solve.
    """
    limit = min(config.max_components, *X.shape)
    wanted = min(INITIAL_WIDTH, limit)
    start, iterations = None, 0
    while True:
        values, vectors, used = _subspace_iteration(X, mean, wanted, config, start)
        iterations += used
        if wanted >= limit or values.sum() >= (config.variance_threshold - 1e-12) * total:
            return values, vectors, iterations
        logger.debug("Top %d components explain %.4f of variance; widening", wanted, values.sum() / total)
        start = vectors.T
        wanted = min(2 * wanted, limit)


def fit_pca(X, k: int | None = None, config: PcaConfig | None = None) -> PcaModel:
    """
    X: n×d scipy sparse or dense matrix. `k` overrides config.n_components;
    both None means the variance-threshold rule.
    """
    config = config or PcaConfig()
    n, d = X.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    k = k if k is not None else config.n_components
    if k is not None and not 1 <= k <= min(n, d):
        raise ValueError(f"k must be in [1, {min(n, d)}], got {k}")

    mean, total, varies = _column_stats(X)
    if not varies or total <= 0.0:
        raise DegenerateCovarianceError("degenerate covariance: every row is identical")

    if d <= config.dense_max_dim:
        values, vectors = _dense_eigen(X, mean)
        if k is None:
            k = choose_components(values[: min(n, d)], total, config.variance_threshold, config.max_components)
        values, vectors, method, iterations = values[:k], vectors[:k], "dense", 0
    else:
        if k is not None:
            values, vectors, iterations = _subspace_iteration(X, mean, k, config)
        else:
            values, vectors, iterations = _grow_until_threshold(X, mean, total, config)
            k = choose_components(values, total, config.variance_threshold, config.max_components)
            values, vectors = values[:k], vectors[:k]
        method = "iterative"

    model = PcaModel(
        mean=np.asarray(mean, dtype=float),
        components=_canonical_signs(np.ascontiguousarray(vectors)),
        explained_variance=np.asarray(values, dtype=float),
        total_variance=float(total),
        n_samples=n,
        method=method,
    )
    logger.info(
        "Fitted PCA (%s%s) on %dx%d: k=%d, explained %.4f of variance",
        method, f", {iterations} iterations" if iterations else "", n, d, model.k, model.explained_fraction,
    )
    return model


def project(model: PcaModel, x: SparseVector | np.ndarray) -> np.ndarray:
    if isinstance(x, SparseVector):
        if x.dim != model.dim:
            raise DimensionMismatchError(f"Vector dim {x.dim} != PCA input dim {model.dim}")
        idx = np.asarray(x.indices, dtype=np.int64)
        return model.components[:, idx] @ np.asarray(x.values, dtype=float) - model.components @ model.mean
    vector = np.asarray(x, dtype=float).ravel()
    if vector.shape[0] != model.dim:
        raise DimensionMismatchError(f"Vector dim {vector.shape[0]} != PCA input dim {model.dim}")
    return model.components @ (vector - model.mean)


def project_many(model: PcaModel, X) -> np.ndarray:
    """n×d sparse or dense → dense n×k."""
    if X.shape[1] != model.dim:
        raise DimensionMismatchError(f"Matrix width {X.shape[1]} != PCA input dim {model.dim}")
    return np.asarray(X @ model.components.T) - model.components @ model.mean


def save_pca(model: PcaModel, path: str | Path) -> Path:
    return write_document(path, "pca", model.to_payload())


def load_pca(path: str | Path) -> PcaModel:
    return PcaModel.from_payload(read_document(path, "pca"))


__all__ = [
    "DegenerateCovarianceError",
    "PcaConfig",
    "PcaModel",
    "choose_components",
    "fit_pca",
    "load_pca",
    "project",
    "project_many",
    "save_pca",
]
