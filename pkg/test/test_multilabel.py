import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import json

import numpy as np
import pytest

from src.classifiers import (
    LinearSvmModel,
    MultiLabelModel,
    label_matrix,
    load_multilabel,
    predict_multilabel,
    save_multilabel,
    train_multilabel,
)
from src.corpus import EMOTIONS, LabelVector, RawRecord
from src.decomp import PcaConfig
from src.features import DimensionMismatchError, TfidfConfig
from src.utils.documents import SchemaMismatchError
from test.sample_data import KEYWORDS, keyword_records


@pytest.fixture(scope="module")
def records():
    return keyword_records(per_label=2)


@pytest.mark.parametrize(
    ("family", "options"),
    [("knn", {"k": "1"}), ("tree", {"min_samples_leaf": "1"})],
)
def test_keyword_corpus_is_predicted_exactly(records, family, options):
    model = train_multilabel(records, TfidfConfig(), family, options)
    predictions = model.predict_many([r.text for r in records])
    for record, predicted in zip(records, predictions):
        assert predicted == record.labels, record.text
    assert model.fallback_labels == ()


def test_svm_keyword_corpus_generalizes_to_bare_keywords():
    records = keyword_records(per_label=8, seed=1)
    model = train_multilabel(records, family="svm", family_config={"regularization": "0.01", "epochs": "200"})
    assert isinstance(model.classifiers["anger"], LinearSvmModel)
    flags = model.predict_features(model.pipeline.features([r.text for r in records]))
    # all-negative guessing would score 5/6
    assert (flags == label_matrix(records)).mean() >= 0.9
    for label, keyword in KEYWORDS.items():
        assert model.decision_scores([keyword], label)[0] > model.decision_scores([keyword], _other(label))[0]


def _other(label: str) -> str:
    return EMOTIONS[(EMOTIONS.index(label) + 1) % len(EMOTIONS)]


def test_empty_text_uses_zero_vector(records):
    model = train_multilabel(records, family="svm")
    zero = np.zeros((1, model.pipeline.dim))
    expected = LabelVector.from_sequence(model.score_matrix(zero)[0] > 0)
    assert model.predict("") == expected
    assert predict_multilabel(model, "😀 !!") == expected


def test_single_class_label_gets_constant_fallback():
    no_fear = [r for r in keyword_records(per_label=2) if not r.labels.fear]
    model = train_multilabel(no_fear, family="knn", family_config={"k": "1"})
    assert model.fallback_labels == ("fear",)
    assert model.classifiers["fear"].family == "constant"
    assert not model.predict(KEYWORDS["fear"]).fear


def test_label_matrix_and_bad_label(records):
    Y = label_matrix(records)
    assert Y.shape == (12, 6)
    assert Y.sum(axis=0).tolist() == [2] * 6
    model = train_multilabel(records, family="tree")
    with pytest.raises(ValueError, match="Unknown emotion"):
        model.decision_scores(["x"], "disgust")


def test_classifier_order_and_dims_are_checked(records):
    model = train_multilabel(records, family="knn", family_config={"k": "1"})
    shuffled = dict(reversed(list(model.classifiers.items())))
    with pytest.raises(ValueError):
        MultiLabelModel(model.pipeline, shuffled, "knn")
    with pytest.raises(DimensionMismatchError):
        model.score_matrix(np.zeros((1, model.pipeline.dim + 1)))


def test_pca_pipeline(records):
    model = train_multilabel(records, family="knn", family_config={"k": "1"}, pca_config=PcaConfig(n_components=4))
    assert model.pipeline.pca is not None
    assert model.pipeline.dim == 4
    features = model.pipeline.features([r.text for r in records])
    assert isinstance(features, np.ndarray) and features.shape == (12, 4)


def test_empty_records_rejected():
    with pytest.raises(ValueError):
        train_multilabel([])


def test_save_and_load_round_trip(tmp_path, records):
    model = train_multilabel(
        records, TfidfConfig(ngram_range=(1, 2)), "svm", pca_config=PcaConfig(n_components=5)
    )
    path = save_multilabel(model, tmp_path / "models" / "svm.json")
    assert sorted(p.name.split("-")[0] for p in (tmp_path / "models" / "pipelines").iterdir()) == ["pca", "tfidf"]

    loaded = load_multilabel(path)
    texts = [r.text for r in records] + ["রাগ", ""]
    for label in EMOTIONS:
        assert np.allclose(loaded.decision_scores(texts, label), model.decision_scores(texts, label))
    assert loaded.family == "svm"
    assert loaded.family_config == model.family_config

    again = save_multilabel(loaded, tmp_path / "copy" / "svm.json")
    assert again.read_bytes() == path.read_bytes()


def test_load_detects_pipeline_mismatch(tmp_path, records):
    model = train_multilabel(records, family="knn", family_config={"k": "1"})
    path = save_multilabel(model, tmp_path / "knn.json")
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["pipeline"]["tfidf"]["id"] = "000000000000"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(SchemaMismatchError, match="does not match"):
        load_multilabel(path)


def test_load_detects_wrong_kind(tmp_path, records):
    model = train_multilabel(records, family="knn", family_config={"k": "1"})
    path = save_multilabel(model, tmp_path / "knn.json")
    tfidf_doc = next((tmp_path / "pipelines").glob("tfidf-*.json"))
    with pytest.raises(SchemaMismatchError):
        load_multilabel(tfidf_doc)


def test_records_with_unicode_keywords_share_pipeline():
    extra = [RawRecord(id="x", text="রাগ রাগ রাগ", labels=LabelVector(anger=True))]
    model = train_multilabel(keyword_records(per_label=2) + extra, family="tree", family_config={"min_samples_leaf": "1"})
    assert model.predict("রাগ রাগ রাগ").anger
