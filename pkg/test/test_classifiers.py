import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from fractions import Fraction

import numpy as np
import pytest
from scipy import sparse

from src.classifiers import (
    AdaBoostConfig,
    ConstantModel,
    ForestConfig,
    KnnConfig,
    SvmConfig,
    TrainingError,
    TreeConfig,
    classifier_from_payload,
    get_family,
    knn_predict,
    stage_weight,
    train_adaboost,
    train_decision_tree,
    train_knn,
    train_linear_svm,
    train_random_forest,
)
from src.classifiers.svm import svm_objective
from src.features import DimensionMismatchError, SparseVector
from src.utils.documents import dumps_document

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0], dtype=bool)


def _blobs(n: int = 60, seed: int = 0):
    rng = np.random.default_rng(seed)
    y = rng.random(n) < 0.5
    X = rng.standard_normal((n, 3)) + np.where(y, 2.0, -2.0)[:, None] * np.array([1.0, 0.5, 0.0])
    return X, y


# ---- linear SVM ----

def test_svm_separates_two_points():
    X = np.array([[-1.0], [1.0]])
    y = np.array([False, True])
    model = train_linear_svm(X, y)
    assert np.array_equal(model.predict(X), y)
    assert model.objective == pytest.approx(svm_objective(sparse.csr_matrix(X), np.array([-1.0, 1.0]), model.weights, model.bias, 1e-4))


def test_svm_duplicated_data_keeps_boundary():
    X = np.array([[-1.0], [1.0]])
    y = np.array([False, True])
    once = train_linear_svm(X, y, SvmConfig(seed=1))
    twice = train_linear_svm(np.vstack([X, X]), np.concatenate([y, y]), SvmConfig(seed=1))
    grid = np.array([[-3.0], [-2.0], [2.0], [3.0]])
    assert np.array_equal(once.predict(grid), twice.predict(grid))
    assert np.array_equal(once.predict(grid), [False, False, True, True])


def test_svm_on_blobs_and_determinism():
    X, y = _blobs()
    model = train_linear_svm(sparse.csr_matrix(X), y, SvmConfig(regularization=0.01, epochs=30, seed=4))
    assert np.mean(model.predict(X) == y) >= 0.9
    again = train_linear_svm(sparse.csr_matrix(X), y, SvmConfig(regularization=0.01, epochs=30, seed=4))
    assert dumps_document("c", model.to_payload()) == dumps_document("c", again.to_payload())
    # the returned iterate never loses to the zero vector
    signs = np.where(y, 1.0, -1.0)
    assert model.objective <= svm_objective(sparse.csr_matrix(X), signs, np.zeros(3), 0.0, 0.01) + 1e-12


def test_svm_rejects_single_class_and_bad_width():
    with pytest.raises(TrainingError, match="single-class"):
        train_linear_svm(np.ones((3, 2)), [1, 1, 1])
    model = train_linear_svm(np.array([[-1.0], [1.0]]), [0, 1])
    with pytest.raises(DimensionMismatchError):
        model.decision_scores(np.zeros((1, 2)))


# ---- KNN ----

def test_knn_exact_match_k1():
    X, y = _blobs(20, seed=3)
    model = train_knn(X, y, KnnConfig(k=1, metric="euclidean"))
    for i in range(len(y)):
        assert knn_predict(model, X[i]) == y[i]


def test_knn_k_equals_n_gives_majority():
    X = np.random.default_rng(0).standard_normal((7, 2))
    y = np.array([1, 1, 1, 1, 0, 0, 0], dtype=bool)
    model = train_knn(X, y, KnnConfig(k=7))
    queries = np.random.default_rng(1).standard_normal((5, 2))
    assert model.predict(queries).all()
    assert np.allclose(model.decision_scores(queries), 1.0 / 7.0)


@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_knn_matches_brute_force(metric):
    rng = np.random.default_rng(11)
    X = rng.standard_normal((50, 4))
    y = rng.random(50) < 0.4
    Q = rng.standard_normal((20, 4))
    model = train_knn(sparse.csr_matrix(X), y, KnnConfig(k=5, metric=metric, chunk_size=7))
    for q, predicted in zip(Q, model.predict(sparse.csr_matrix(Q))):
        if metric == "euclidean":
            dist = np.linalg.norm(X - q, axis=1)
        else:
            dist = 1.0 - (X @ q) / (np.linalg.norm(X, axis=1) * np.linalg.norm(q))
        nearest = np.argsort(dist, kind="stable")[:5]
        assert predicted == (y[nearest].sum() > 2)


@pytest.mark.parametrize("k", [1, 3, 5, 9])
@pytest.mark.parametrize("metric", ["euclidean", "cosine"])
def test_knn_neighbours_match_oracle_with_ties(metric, k):
    rng = np.random.default_rng(30 + k)
    for n in (k, 37, 200):
        if metric == "euclidean":
            # small integer grid: many exactly equal distances
            X = rng.integers(0, 3, size=(n, 3)).astype(float)
            Q = rng.integers(0, 3, size=(15, 3)).astype(float)
        else:
            # duplicated rows: exactly equal similarities
            base = rng.standard_normal((max(n // 2, 1), 4))
            X = base[rng.integers(0, len(base), size=n)]
            Q = rng.standard_normal((15, 4))
        y = rng.random(n) < 0.5
        model = train_knn(sparse.csr_matrix(X), y, KnnConfig(k=k, metric=metric, chunk_size=4))
        found = model.neighbours(sparse.csr_matrix(Q))
        predicted = model.predict(sparse.csr_matrix(Q))
        for q, row, label in zip(Q, found, predicted):
            if metric == "euclidean":
                dist = np.sqrt(((X - q) ** 2).sum(axis=1))
            else:
                dist = 1.0 - (X @ q) / (np.sqrt((X * X).sum(axis=1)) * np.sqrt(q @ q))
            nearest = np.argsort(dist, kind="stable")[:k]
            assert row.tolist() == nearest.tolist()
            assert label == (y[nearest].sum() * 2 > k)


def test_knn_zero_query_and_errors():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    model = train_knn(X, [1, 0, 0], KnnConfig(k=1))
    # zero query is equidistant from everything under cosine: lowest index wins
    assert model.neighbours(np.zeros((1, 2))).tolist() == [[0]]
    with pytest.raises(TrainingError):
        KnnConfig(k=2)
    with pytest.raises(TrainingError):
        train_knn(X, [1, 0, 0], KnnConfig(k=5))
    with pytest.raises(TrainingError):
        train_knn(np.zeros((0, 2)), [])


# ---- decision tree ----

def test_tree_learns_xor():
    model = train_decision_tree(XOR_X, XOR_Y, TreeConfig(max_depth=2, min_samples_leaf=1))
    assert np.array_equal(model.predict(XOR_X), XOR_Y)
    assert model.depth == 2


def test_default_tree_fits_training_set_exactly():
    model = train_decision_tree(XOR_X, XOR_Y)
    assert np.array_equal(model.predict(XOR_X), XOR_Y)
    X, y = _blobs(40, seed=6)
    assert np.array_equal(train_decision_tree(X, y).predict(X), y)


def test_tree_pure_input_is_one_leaf():
    model = train_decision_tree(XOR_X, np.ones(4, dtype=bool))
    assert model.node_count == 1
    assert model.predict(XOR_X).all()


def _oracle_root_split(X: np.ndarray, y: np.ndarray, min_leaf: int):
    n = len(y)
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for low, high in zip(values[:-1], values[1:]):
            threshold = (low + high) / 2.0
            left = X[:, f] <= threshold
            nl, nr = int(left.sum()), n - int(left.sum())
            if nl < min_leaf or nr < min_leaf:
                continue
            pl, pr = int(y[left].sum()), int(y[~left].sum())
            score = Fraction(2 * pl * (nl - pl), nl) + Fraction(2 * pr * (nr - pr), nr)
            key = (score, f, threshold)
            if best is None or key < best:
                best = key
    return best


def test_tree_root_split_matches_exhaustive_search():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((30, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.standard_normal(30)) > 0
    model = train_decision_tree(X, y, TreeConfig(max_depth=3, min_samples_leaf=1))
    _, feature, threshold = _oracle_root_split(X, y, 1)
    assert model.feature[0] == feature
    assert model.threshold[0] == pytest.approx(threshold, abs=1e-12)
    assert model.depth <= 3


def test_tree_handles_implicit_zeros():
    X = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 2.0], [3.0, 0.0], [4.0, 0.0]]))
    y = np.array([0, 0, 1, 1], dtype=bool)
    model = train_decision_tree(X, y, TreeConfig(min_samples_leaf=1))
    assert np.array_equal(model.predict(X), y)
    assert model.feature[0] == 0
    assert model.threshold[0] == pytest.approx(1.5)


def test_tree_min_samples_leaf_and_weights():
    X = np.arange(6, dtype=float).reshape(-1, 1)
    y = np.array([1, 0, 0, 0, 0, 0], dtype=bool)
    model = train_decision_tree(X, y, TreeConfig(min_samples_leaf=2))
    assert model.n_samples[model.left[0]] >= 2 and model.n_samples[model.right[0]] >= 2
    with pytest.raises(TrainingError):
        train_decision_tree(X, y, sample_weight=np.zeros(6))
    weighted = train_decision_tree(X, y, TreeConfig(max_depth=0), sample_weight=[5, 1, 1, 1, 1, 1])
    assert weighted.positive_probability(X[:1]) == pytest.approx([0.5])


# ---- random forest ----

def test_single_tree_forest_equals_tree():
    X, y = _blobs(40, seed=5)
    tree = train_decision_tree(X, y, TreeConfig(min_samples_leaf=1))
    forest = train_random_forest(
        X, y, ForestConfig(n_trees=1, bootstrap=False, max_features="all", min_samples_leaf=1)
    )
    Q = np.random.default_rng(6).standard_normal((25, 3)) * 2
    assert np.array_equal(forest.predict(Q), tree.predict(Q))


def test_forest_same_seed_same_bytes():
    X, y = _blobs(40, seed=7)
    config = ForestConfig(n_trees=7, seed=13, n_jobs=2)
    first = train_random_forest(sparse.csr_matrix(X), y, config)
    second = train_random_forest(sparse.csr_matrix(X), y, config)
    assert dumps_document("forest", first.to_payload()) == dumps_document("forest", second.to_payload())
    assert np.mean(first.predict(X) == y) >= 0.9


def test_forest_tied_vote_is_negative():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1], dtype=bool)
    positive = train_decision_tree(X, np.array([1, 1], dtype=bool))
    negative = train_decision_tree(X, np.array([0, 0], dtype=bool))
    forest = get_family("forest").model_cls(trees=(positive, negative), config=ForestConfig(n_trees=2))
    assert not forest.predict(X).any()
    assert np.allclose(forest.decision_scores(X), 0.0)


# ---- AdaBoost ----

def test_stage_weight():
    assert stage_weight(0.25) == pytest.approx(0.549306, abs=1e-6)
    assert stage_weight(0.0) == pytest.approx(np.log(1e10))


def test_adaboost_perfect_first_round_stops():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1], dtype=bool)
    model = train_adaboost(X, y, AdaBoostConfig(n_estimators=10, max_depth=1, min_samples_leaf=1))
    assert len(model.learners) == 1
    assert model.stage_errors == (0.0,)
    assert np.array_equal(model.predict(X), y)


def test_adaboost_weight_recursion_on_alternating_points():
    X = np.arange(8, dtype=float).reshape(-1, 1)
    y = np.arange(8) % 2 == 1
    signs = np.where(y, 1.0, -1.0)
    model = train_adaboost(X, y, AdaBoostConfig(n_estimators=3, max_depth=1, min_samples_leaf=1))
    assert len(model.learners) == 3
    assert model.stage_errors[0] == pytest.approx(3 / 8)

    # replay the recursion from the stored learners
    weights = np.full(8, 1 / 8)
    votes = model.stage_votes(X)
    ensemble = np.zeros(8)
    errors = []
    for m, (alpha, error) in enumerate(zip(model.alphas, model.stage_errors)):
        assert error == pytest.approx(weights[votes[m] != signs].sum(), abs=1e-12)
        assert alpha == pytest.approx(stage_weight(error))
        assert error < 0.5
        weights = weights * np.exp(-alpha * signs * votes[m])
        weights = weights / weights.sum()
        ensemble += alpha * votes[m]
        errors.append(np.mean((ensemble > 0) != y))
    assert all(later <= earlier + 1e-12 for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] <= model.stage_errors[0] + 1e-12


def test_adaboost_weights_stay_normalised_every_round():
    X, y = _blobs(80, seed=9)
    model = train_adaboost(X, y, AdaBoostConfig(n_estimators=20, max_depth=1))
    assert len(model.weight_sums) == len(model.learners) > 1
    assert all(abs(total - 1.0) <= 1e-9 for total in model.weight_sums)
    assert all(alpha > 0 for alpha in model.alphas)

    alternating = train_adaboost(
        np.arange(8, dtype=float).reshape(-1, 1), np.arange(8) % 2 == 1, AdaBoostConfig(n_estimators=3, max_depth=1)
    )
    assert len(alternating.weight_sums) == 3
    assert all(abs(total - 1.0) <= 1e-9 for total in alternating.weight_sums)


def test_adaboost_beats_single_stump_on_blobs():
    X, y = _blobs(80, seed=9)
    stump = train_decision_tree(X, y, TreeConfig(max_depth=1, min_samples_leaf=1))
    boosted = train_adaboost(X, y, AdaBoostConfig(n_estimators=20, max_depth=1))
    assert np.mean(boosted.predict(X) == y) >= np.mean(stump.predict(X) == y)


# ---- registry and payloads ----

@pytest.mark.parametrize("family", ["svm", "knn", "tree", "forest", "adaboost"])
def test_payload_round_trip_keeps_scores(family):
    X, y = _blobs(30, seed=2)
    spec = get_family(family)
    options = {"n_trees": "5"} if family == "forest" else {}
    model = spec.trainer(sparse.csr_matrix(X), y, spec.make_config(options))
    loaded = classifier_from_payload(model.to_payload())
    assert type(loaded) is type(model)
    assert np.allclose(loaded.decision_scores(X), model.decision_scores(X))
    assert loaded.decision_score(SparseVector.from_row(sparse.csr_matrix(X), 0)) == pytest.approx(
        model.decision_score(X[0])
    )


def test_make_config_parses_strings_and_rejects_unknown():
    assert get_family("svm").make_config({"regularization": "0.01", "epochs": "5"}) == SvmConfig(0.01, 5)
    assert get_family("tree").make_config({"max_depth": "none"}).max_depth is None
    assert get_family("forest").make_config({"bootstrap": "off"}).bootstrap is False
    with pytest.raises(TrainingError):
        get_family("svm").make_config({"gamma": "1"})
    with pytest.raises(TrainingError):
        get_family("svm").make_config({"epochs": "many"})
    with pytest.raises(TrainingError):
        get_family("naive_bayes")


def test_constant_model():
    model = ConstantModel(input_dim=3)
    assert not model.predict(np.zeros((2, 3))).any()
    assert classifier_from_payload(model.to_payload()) == model
