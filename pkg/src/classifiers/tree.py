"""
CART decision tree with weighted Gini impurity.

Candidate thresholds are midpoints between consecutive distinct values of a
feature inside the node; a sample goes left when its value is <= threshold.
Sparse columns get a virtual entry for their implicit zeros, so TF-IDF matrices
are split without densifying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np
from scipy import sparse

from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, TrainingError, as_csr, as_matrix, check_targets, config_as_dict

logger = get_logger("classifiers.tree")

LEAF = -1
_TIE = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | None = None  # None → every feature is a candidate at every node
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_depth is not None and self.max_depth < 0:
            raise TrainingError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise TrainingError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.max_features is not None and self.max_features < 1:
            raise TrainingError(f"max_features must be >= 1 or None, got {self.max_features}")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    impurity: float  # W_left·gini_left + W_right·gini_right


@dataclass(frozen=True)
class TreeModel(BinaryClassifier):
    """
    Flat node arrays; node 0 is the root. For a leaf feature == -1 and
    left == right == -1. `value` is the weighted share of positives in the node.
    """

    family: ClassVar[str] = "tree"

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    input_dim: int
    config: TreeConfig

    def __post_init__(self) -> None:
        for arr in (self.feature, self.threshold, self.left, self.right, self.value, self.n_samples):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.input_dim

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row."""
        X = as_matrix(X, self.dim)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = np.nonzero(self.feature[nodes] != LEAF)[0]
        while active.size:
            current = nodes[active]
            cols = self.feature[current]
            if sparse.issparse(X):
                values = np.asarray(X[active, cols]).ravel()
            else:
                values = X[active, cols]
            go_left = values <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[nodes[active]] != LEAF]
        return nodes

    def positive_probability(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def _scores(self, X) -> np.ndarray:
        return self.positive_probability(X) - 0.5

    def to_payload(self) -> dict:
        return {
            "family": self.family,
            "config": config_as_dict(self.config),
            "input_dim": self.input_dim,
            "nodes": {
                "feature": self.feature,
                "threshold": self.threshold,
                "left": self.left,
                "right": self.right,
                "value": self.value,
                "n_samples": self.n_samples,
            },
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "TreeModel":
        nodes = payload["nodes"]
        return cls(
            feature=np.array(nodes["feature"], dtype=np.int64),
            threshold=np.array(nodes["threshold"], dtype=float),
            left=np.array(nodes["left"], dtype=np.int64),
            right=np.array(nodes["right"], dtype=np.int64),
            value=np.array(nodes["value"], dtype=float),
            n_samples=np.array(nodes["n_samples"], dtype=np.int64),
            input_dim=int(payload["input_dim"]),
            config=TreeConfig(**payload["config"]),
        )


def gini_split_scores(w_left, pos_left, w_right, pos_right) -> np.ndarray:
    """W_L·gini(L) + W_R·gini(R) with gini = 2p(1 − p)."""
    w_left = np.asarray(w_left, dtype=float)
    w_right = np.asarray(w_right, dtype=float)
    left = np.divide(2.0 * pos_left * (w_left - pos_left), w_left, out=np.zeros_like(w_left), where=w_left > 0)
    right = np.divide(2.0 * pos_right * (w_right - pos_right), w_right, out=np.zeros_like(w_right), where=w_right > 0)
    return left + right


def best_split(
    sub: sparse.csr_matrix,
    weights: np.ndarray,
    positive: np.ndarray,
    candidates: np.ndarray,
    min_samples_leaf: int,
) -> Split | None:
    """
    Best split of the node rows in `sub` (node-local CSR) over `candidates`
    (global feature indices). Impurity ties within tolerance go to the lowest
    feature index, then the lowest threshold.
    """
    n = sub.shape[0]
    m = candidates.shape[0]
    block = sub[:, candidates].tocoo() if m != sub.shape[1] or np.any(candidates != np.arange(m)) else sub.tocoo()
    rows, cols, vals = block.row, block.col.astype(np.int64), block.data.astype(float)

    w_pos = weights * positive
    nz_count = np.bincount(cols, minlength=m)
    nz_weight = np.bincount(cols, weights=weights[rows], minlength=m)
    nz_pos = np.bincount(cols, weights=w_pos[rows], minlength=m)
    total_w = float(weights.sum())
    total_pos = float(w_pos.sum())

    zero_cols = np.nonzero(nz_count < n)[0]
    col = np.concatenate([cols, zero_cols])
    val = np.concatenate([vals, np.zeros(zero_cols.shape[0])])
    ew = np.concatenate([weights[rows], total_w - nz_weight[zero_cols]])
    ep = np.concatenate([w_pos[rows], total_pos - nz_pos[zero_cols]])
    ec = np.concatenate([np.ones(rows.shape[0], dtype=np.int64), (n - nz_count[zero_cols]).astype(np.int64)])

    order = np.lexsort((val, col))
    col, val, ew, ep, ec = col[order], val[order], ew[order], ep[order], ec[order]
    if col.shape[0] < 2:
        return None

    # prefix sums restarted at each column
    starts = np.searchsorted(col, np.arange(m))
    cw, cp, cc = np.cumsum(ew), np.cumsum(ep), np.cumsum(ec)
    offset_w = np.concatenate([[0.0], cw])[starts][col]
    offset_p = np.concatenate([[0.0], cp])[starts][col]
    offset_c = np.concatenate([[0], cc])[starts][col]
    left_w, left_p, left_c = cw - offset_w, cp - offset_p, cc - offset_c

    same_col = col[:-1] == col[1:]
    rises = val[:-1] < val[1:]
    valid = same_col & rises & (left_c[:-1] >= min_samples_leaf) & (n - left_c[:-1] >= min_samples_leaf)
    if not valid.any():
        return None
    pos = np.nonzero(valid)[0]
    scores = gini_split_scores(left_w[pos], left_p[pos], total_w - left_w[pos], total_pos - left_p[pos])

    tolerance = _TIE * max(total_w, 1.0)
    near = pos[scores <= scores.min() + tolerance]
    near_scores = scores[scores <= scores.min() + tolerance]
    features = candidates[col[near]]
    thresholds = (val[near] + val[near + 1]) / 2.0
    choice = np.lexsort((thresholds, features))[0]
    threshold = float(thresholds[choice])
    upper = float(val[near[choice] + 1])
    if threshold >= upper:
        threshold = float(val[near[choice]])
    return Split(feature=int(features[choice]), threshold=threshold, impurity=float(near_scores[choice]))


def _varying_columns(sub: sparse.csr_matrix) -> np.ndarray:
    high = sub.max(axis=0).toarray().ravel()
    low = sub.min(axis=0).toarray().ravel()
    return high != low


def _node_candidates(sub: sparse.csr_matrix, max_features: int | None, rng: np.random.Generator | None) -> tuple[np.ndarray, np.ndarray | None]:
    """(sorted candidate features, remaining permutation tail for the fallback)."""
    d = sub.shape[1]
    if max_features is None or max_features >= d:
        return np.arange(d), None
    permutation = rng.permutation(d)
    return np.sort(permutation[:max_features]), permutation[max_features:]


def train_decision_tree(X, y, config: TreeConfig | None = None, sample_weight=None) -> TreeModel:
    """
    Greedy CART growth. A node becomes a leaf at max_depth, when it holds fewer
    than 2·min_samples_leaf samples, when it is pure, or when no split leaves
    min_samples_leaf samples on both sides. A split is taken even if it does not
    lower impurity.
    """
    config = config or TreeConfig()
    X = as_csr(X)
    n, d = X.shape
    labels = check_targets(y, n)
    positive = labels.astype(float)
    if sample_weight is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(sample_weight, dtype=float).ravel()
        if weights.shape[0] != n or np.any(weights < 0) or not np.isfinite(weights).all():
            raise TrainingError("sample_weight must be finite, non-negative and one per row")
        if weights.sum() <= 0:
            raise TrainingError("sample_weight sums to zero")
    rng = np.random.default_rng(config.seed) if config.max_features is not None else None

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    counts: list[int] = []

    def new_node(rows: np.ndarray) -> int:
        w = weights[rows]
        mass = float(w.sum())
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float((w * positive[rows]).sum() / mass) if mass > 0 else 0.0)
        counts.append(int(rows.shape[0]))
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        pure = positive[rows].min() == positive[rows].max()
        if pure or rows.shape[0] < 2 * config.min_samples_leaf:
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        sub = X[rows]
        node_w, node_pos = weights[rows], positive[rows]
        candidates, tail = _node_candidates(sub, config.max_features, rng)
        split = best_split(sub, node_w, node_pos, candidates, config.min_samples_leaf)
        if split is None and tail is not None:
            varying = _varying_columns(sub)
            fallback = next((f for f in tail if varying[f]), None)
            if fallback is not None:
                split = best_split(sub, node_w, node_pos, np.array([fallback]), config.min_samples_leaf)
        if split is None:
            continue

        column = np.asarray(sub[:, split.feature].todense()).ravel()
        go_left = column <= split.threshold
        left_rows, right_rows = rows[go_left], rows[~go_left]
        feature[node], threshold[node] = split.feature, split.threshold
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    model = TreeModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=float),
        n_samples=np.array(counts, dtype=np.int64),
        input_dim=d,
        config=config,
    )
    logger.debug("Tree grown: %d node(s), depth %d, n=%d d=%d", model.node_count, model.depth, n, d)
    return model


def candidate_count(d: int, rule: str) -> int | None:
    """'sqrt' → ⌈√d⌉, 'all' → None."""
    if rule == "all":
        return None
    if rule == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    raise TrainingError(f"Unknown max_features rule {rule!r}; expected 'sqrt' or 'all'")
