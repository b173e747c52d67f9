"""Small synthetic corpora shared by the tests."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import numpy as np

from src.corpus import EMOTIONS, LabelVector, RawRecord

# one keyword per emotion, disjoint
KEYWORDS = {
    "love": "ভালোবাসা",
    "joy": "আনন্দ",
    "surprise": "অবাক",
    "anger": "রাগ",
    "sadness": "দুঃখ",
    "fear": "ভয়",
}
FILLER = ("আজ", "কাল", "খেলা", "খবর", "দেশ", "মানুষ", "সময়", "কথা")

HEADER = "Data,Love,Joy,Surprise,Anger,Sadness,Fear,Domain,Topic"


def keyword_records(per_label: int = 2, seed: int = 0) -> list[RawRecord]:
    """per_label records for every emotion; each text carries its emotion's keyword plus filler."""
    rng = np.random.default_rng(seed)
    records = []
    for label in EMOTIONS:
        for copy in range(per_label):
            filler = " ".join(rng.choice(FILLER, size=3, replace=False))
            records.append(
                RawRecord(
                    id=f"{label}-{copy}",
                    text=f"{KEYWORDS[label]} {filler}",
                    labels=LabelVector.from_labels([label]),
                    platform="YouTube" if copy % 2 == 0 else "Facebook",
                    topic="Sports",
                )
            )
    return records


def random_multilabel(
    n: int,
    seed: int = 0,
    rates=(0.30, 0.25, 0.08, 0.20, 0.15, 0.05),
    labelled: float = 0.6,
    pair_rate: float = 0.05,
) -> list[RawRecord]:
    """
    Random label vectors: a share `labelled` of the records gets one primary
    label by rate, and those get a second one with probability pair_rate.
    """
    rng = np.random.default_rng(seed)
    probs = np.asarray(rates) / np.sum(rates)
    records = []
    for i in range(n):
        flags = np.zeros(len(EMOTIONS), dtype=bool)
        if rng.random() < labelled:
            flags[rng.choice(len(EMOTIONS), p=probs)] = True
        if flags.any() and rng.random() < pair_rate:
            flags[rng.choice(len(EMOTIONS), p=probs)] = True
        words = " ".join(rng.choice(FILLER, size=4))
        records.append(RawRecord(id=str(i), text=words, labels=LabelVector.from_sequence(flags)))
    return records


def independent_multilabel(n: int, seed: int = 0, rates=(0.17, 0.28, 0.35, 0.30, 0.22, 0.31)) -> list[RawRecord]:
    """Every label drawn independently at its own rate, so about half the records carry two or more labels."""
    rng = np.random.default_rng(seed)
    flags = rng.random((n, len(EMOTIONS))) < np.asarray(rates)
    return [
        RawRecord(id=f"m{i}", text=" ".join(rng.choice(FILLER, size=4)), labels=LabelVector.from_sequence(row))
        for i, row in enumerate(flags)
    ]


def csv_row(text: str, labels: str, domain: str = "YouTube", topic: str = "Sports") -> str:
    """labels: six comma separated values in Love..Fear order."""
    quoted = '"' + text.replace('"', '""') + '"'
    return f"{quoted},{labels},{domain},{topic}"


def write_keyword_csv(path: Path, per_label: int = 6, seed: int = 0) -> Path:
    lines = [HEADER]
    for record in keyword_records(per_label, seed):
        flags = ",".join("1" if f else "0" for f in record.labels.as_tuple())
        lines.append(csv_row(record.text, flags, record.platform or "", record.topic or ""))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
