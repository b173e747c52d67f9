import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import numpy as np
import pytest

from src.corpus import (
    EMOTIONS,
    DatasetError,
    DatasetSchema,
    LabelVector,
    RawRecord,
    compute_split_profile,
    compute_stats,
    load_dataset,
    preprocess,
    read_split_manifest,
    sentence_word_counts,
    stratified_split,
    write_records,
    write_split_manifest,
)
from src.utils.config import ExperimentConfig, parse_config_text
from test.sample_data import HEADER, csv_row, independent_multilabel, random_multilabel

TOY_ROWS = [
    ("ভালো খবর।", "1,0,0,0,0,0", "YouTube"),
    ("খুব রাগ হচ্ছে! আর না।", "0,0,0,1,0,0", "YouTube"),
    ("অবাক কাণ্ড", "0,0,1,0,0,0", "Facebook"),
    ("দুঃখ আর ভয়", "0,0,0,0,1,1", "YouTube"),
    ("আনন্দ আনন্দ", "0,1,0,0,0,0", "YouTube"),
    ("ভালোবাসা", "1,0,0,0,0,0", "Facebook"),
    ("ভয় লাগে", "0,0,0,0,0,1", "YouTube"),
    ("রাগ আর দুঃখ", "0,0,0,1,1,0", "YouTube"),
    ("খুশি", "0,1,0,0,0,0", "News"),
    ("কষ্ট", "0,0,0,0,1,0", "YouTube"),
]


def _write(path: Path, rows) -> Path:
    lines = [HEADER] + [csv_row(text, labels, domain) for text, labels, domain in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def toy_file(tmp_path):
    return _write(tmp_path / "toy.csv", TOY_ROWS)


def test_load_well_formed_file(tmp_path):
    path = _write(tmp_path / "three.csv", TOY_ROWS[:3])
    records, rejected = load_dataset(path)
    assert len(records) == 3
    assert rejected == []
    assert records[1].labels == LabelVector(anger=True)
    assert records[2].platform == "Facebook"
    assert [r.id for r in records] == ["0", "1", "2"]


def test_bad_label_value_strict_aborts_with_row_number(tmp_path):
    rows = [TOY_ROWS[0], ("বাজে", "0,0,0,2,0,0", "YouTube"), TOY_ROWS[2]]
    path = _write(tmp_path / "bad.csv", rows)
    with pytest.raises(DatasetError, match="row 2"):
        load_dataset(path, strict=True)


def test_bad_label_value_lenient_is_reported(tmp_path):
    rows = [TOY_ROWS[0], ("বাজে", "0,0,0,2,0,0", "YouTube"), TOY_ROWS[2], ("   ", "1,0,0,0,0,0", "YouTube")]
    path = _write(tmp_path / "bad.csv", rows)
    records, rejected = load_dataset(path)
    assert len(records) == 2
    assert [r.row for r in rejected] == [2, 4]
    assert "Anger" in rejected[0].reason
    assert rejected[1].reason == "empty text"


def test_missing_column_and_missing_file(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("Text,Love\nx,1\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="missing mapped column"):
        load_dataset(path)
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "absent.csv")


def test_schema_from_config_and_optional_columns(tmp_path):
    config = ExperimentConfig(
        sections=parse_config_text(
            "[dataset]\ntext_column = Comment\ndelimiter = tab\nplatform_column = none\ntopic_column = none\n"
        )
    )
    schema = DatasetSchema.from_config(config)
    assert schema.text_column == "Comment"
    assert schema.delimiter == "\t"
    assert schema.platform_column is None

    path = tmp_path / "tabbed.tsv"
    path.write_text("Comment\tLove\tJoy\tSurprise\tAnger\tSadness\tFear\nআনন্দ\t0\t1\t0\t0\t0\t0\n", encoding="utf-8")
    records, _ = load_dataset(path, schema)
    assert records[0].labels == LabelVector(joy=True)
    assert records[0].platform is None


def test_write_records_round_trip(tmp_path, toy_file):
    records, _ = load_dataset(toy_file)
    again, rejected = load_dataset(write_records(records, tmp_path / "copy.csv"))
    assert rejected == []
    assert again == records


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("", ""),
        ("ভালো!!  খুব   ভালো।", "ভালো খুব ভালো"),
        ("great 😀 job", "great job"),
        ("  কি? (সত্যি)  ", "কি সত্যি"),
        ("👍🏽 ঠিক আছে ❤️", "ঠিক আছে"),
    ],
)
def test_preprocess(text, expected):
    assert preprocess(text) == expected


@pytest.mark.parametrize("text", ["ভালো!!  খুব   ভালো।", "a—b… “c” 😀😀 d", "#️⃣ 1️⃣ x", "৷ ॥ ।"])
def test_preprocess_is_idempotent(text):
    once = preprocess(text)
    assert preprocess(once) == once


FUZZ_ALPHABET = (
    list("অআইকখগঘরাগভয়দুঃখ") + ["\u09be", "\u09bf", "\u09c1", "\u0981", "\u0982", "\u09bc", "\u09cd", "\u200d", "\ufe0f"]
    + list("।॥৷,.!?\"'()-—…“”#*") + ["😀", "🎉", "❤", "👍", "🏽", "1\ufe0f\u20e3", "🇧🇩"]
    + list(" \t\n\u00a0") + list("abcXYZ০১২123")
)


def test_preprocess_is_idempotent_on_random_strings():
    rng = np.random.default_rng(17)
    for _ in range(3000):
        text = "".join(rng.choice(FUZZ_ALPHABET, size=int(rng.integers(0, 40))))
        once = preprocess(text)
        assert preprocess(once) == once, repr(text)
        assert once == once.strip()
        assert "  " not in once


def test_sentence_word_counts():
    assert sentence_word_counts("খুব রাগ হচ্ছে! আর না।") == [3, 2]
    assert sentence_word_counts("!!!") == []


def test_compute_stats_matches_hand_tally(toy_file):
    records, _ = load_dataset(toy_file)
    stats = compute_stats(records, top_n=1)
    assert stats.record_count == 10
    assert dict(zip(EMOTIONS, stats.per_label_counts)) == {
        "love": 2, "joy": 2, "surprise": 1, "anger": 2, "sadness": 3, "fear": 2,
    }
    assert stats.multi_label_fraction == pytest.approx(0.2)
    assert stats.avg_sentences_per_entry[0] == pytest.approx(1.1)
    assert stats.avg_words_per_sentence[0] == pytest.approx(2.0)
    assert stats.platform_shares == pytest.approx({"Facebook": 0.2, "News": 0.1, "YouTube": 0.7})
    assert stats.top_terms == [("আর", 3)]

    payload = stats.to_payload()
    assert payload["per_label_fraction"]["sadness"] == pytest.approx(0.3)
    assert payload["topic_shares"] == {"Sports": 1.0}


def test_compute_stats_single_record_and_empty():
    one = [RawRecord(id="a", text="রাগ", labels=LabelVector(anger=True))]
    assert compute_stats(one).multi_label_fraction == 0.0
    assert compute_stats(one).platform_shares is None
    with pytest.raises(DatasetError):
        compute_stats([])


def _single_label(n: int) -> list[RawRecord]:
    return [
        RawRecord(id=f"r{i}", text="x", labels=LabelVector.from_labels([EMOTIONS[i % len(EMOTIONS)]]))
        for i in range(n)
    ]


def test_split_sizes_exact():
    split = stratified_split(_single_label(100), (0.8, 0.15, 0.05), seed=3)
    assert (len(split.train_ids), len(split.validation_ids), len(split.test_ids)) == (80, 15, 5)
    every = split.train_ids + split.validation_ids + split.test_ids
    assert sorted(every) == sorted(f"r{i}" for i in range(100))


def test_split_is_deterministic_per_seed():
    records = random_multilabel(300, seed=1)
    first = stratified_split(records, seed=11)
    assert stratified_split(records, seed=11) == first
    assert stratified_split(records, seed=12) != first


def test_split_label_rates_close_to_global():
    records = random_multilabel(1000, seed=7)
    split = stratified_split(records, seed=0)
    labels = {r.id: r.labels.as_array() for r in records}
    global_rate = np.mean([labels[r.id] for r in records], axis=0)
    for name, ids in split.subsets().items():
        rate = np.mean([labels[i] for i in ids], axis=0)
        assert np.all(np.abs(rate - global_rate) <= 0.02 + 1e-12), (name, rate, global_rate)


@pytest.mark.parametrize("n", [790, 1000])
@pytest.mark.parametrize("corpus_seed", [12, 13, 14])
def test_split_rates_hold_on_overlapping_labels(n, corpus_seed):
    """Независимые метки (много мульти-лейбл записей): отклонение доли каждой метки в каждой части не больше 2 п.п."""
    records = independent_multilabel(n, seed=corpus_seed)
    matrix = np.array([r.labels.as_tuple() for r in records], dtype=float)
    assert (matrix.sum(axis=1) >= 2).mean() > 0.3
    global_rate = matrix.mean(axis=0)
    position = {r.id: i for i, r in enumerate(records)}
    for split_seed in range(3):
        split = stratified_split(records, seed=split_seed)
        for name, ids in split.subsets().items():
            rate = matrix[[position[i] for i in ids]].mean(axis=0)
            worst = np.abs(rate - global_rate).max()
            assert worst <= 0.02 + 1e-12, (name, split_seed, worst)


def test_split_rejects_bad_ratios_and_duplicates():
    records = _single_label(10)
    with pytest.raises(DatasetError):
        stratified_split(records, (0.5, 0.5))
    with pytest.raises(DatasetError):
        stratified_split(records, (0.7, 0.2, 0.2))
    with pytest.raises(DatasetError):
        stratified_split(records + records[:1])
    with pytest.raises(DatasetError):
        stratified_split([])


def test_split_manifest_round_trip(tmp_path):
    records = random_multilabel(60, seed=2)
    split = stratified_split(records, seed=5)
    path = write_split_manifest(split, tmp_path / "split.json", {"profile": compute_split_profile(records, split)})
    assert read_split_manifest(path) == split

    profile = compute_split_profile(records, split)
    assert sum(p["count"] for p in profile.values()) == 60
    assert set(profile["test"]["label_rates"]) == set(EMOTIONS)
