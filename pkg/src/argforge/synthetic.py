"""Synthetic economic-news fixtures with a planted premise signal.

Premise-class sentences carry discourse markers from the shipped lexicon;
non-premise sentences avoid every marker phrase. That makes the planted
signal recoverable by the lexical feature block, which is what the
end-to-end checks exploit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .features import MarkerLexicon, extract_lexical
from .ingest import Document, tokenize

PLANT_MARKERS = (
    "потому что",
    "поэтому",
    "так как",
    "следовательно",
    "кроме того",
    "например",
    "однако",
    "таким образом",
)

_SUBJECTS = (
    "ставка", "ставки", "банк", "банки", "кредит", "кредиты", "вклад", "вклады",
    "цена", "цены", "налог", "налоги", "доход", "доходы", "акции", "облигации",
    "рынок", "бюджет", "инфляция", "валюта", "экономика", "зарплата",
)
_PAST_VERBS = ("выросли", "упали", "снизились", "повысились")
_PAST_VERBS_F = ("выросла", "упала", "снизилась", "повысилась")
_PRESENT_VERBS = ("растут", "падают")
_PRESENT_VERBS_F = ("растет", "падает")
_ADJECTIVES = ("высокий", "низкий", "новый", "ключевой", "крупный", "валютный")
_ADVERBS = ("значительно", "резко", "быстро", "заметно", "существенно", "сегодня", "вчера")
_OBJECTS = ("на рынке", "в банке", "в бюджете", "в экономике", "за год", "в регионе")

# source-label scheme of the synthetic annotated corpus
SOURCE_LABEL_RULES = {
    "argument": "premise",
    "background": "non_premise",
    "heading": "exclude",
}


def _clause(rng: np.random.Generator) -> str:
    subject = _SUBJECTS[rng.integers(0, len(_SUBJECTS))]
    plural = subject.endswith(("ы", "и"))
    if rng.random() < 0.5:
        verb_bank = _PAST_VERBS if plural else _PAST_VERBS_F
    else:
        verb_bank = _PRESENT_VERBS if plural else _PRESENT_VERBS_F
    verb = verb_bank[rng.integers(0, len(verb_bank))]
    words = [subject, verb]
    if rng.random() < 0.6:
        words.insert(1, _ADVERBS[rng.integers(0, len(_ADVERBS))])
    if rng.random() < 0.6:
        words.append(_OBJECTS[rng.integers(0, len(_OBJECTS))])
    if rng.random() < 0.5:
        words.append(f"на {int(rng.integers(1, 30))} процентов")
    return " ".join(words)


def make_premise_text(rng: np.random.Generator) -> str:
    marker = PLANT_MARKERS[rng.integers(0, len(PLANT_MARKERS))]
    body = _clause(rng)
    if rng.random() < 0.5:
        text = f"{marker} {body}."
    else:
        text = f"{_clause(rng)}, {marker} {body}."
    return text[0].upper() + text[1:]


def make_non_premise_text(rng: np.random.Generator) -> str:
    text = _clause(rng)
    if rng.random() < 0.3:
        adjective = _ADJECTIVES[rng.integers(0, len(_ADJECTIVES))]
        text = f"{adjective} {text}"
    return text[0].upper() + text[1:] + "."


def contains_marker(text: str, lexicon: MarkerLexicon) -> bool:
    return bool(extract_lexical(tokenize(text), lexicon))


def build_labeled_records(n: int, seed: int, heading_share: float = 0.05) -> list[dict]:
    """Annotated-corpus records {id, text, label} with source-scheme labels.

    Half the non-heading records are planted premises (label ``argument``),
    half plain statements (label ``background``).
    """
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        roll = rng.random()
        if roll < heading_share:
            label = "heading"
            text = f"Раздел {i}: обзор недели"
        elif roll < heading_share + (1 - heading_share) / 2:
            label = "argument"
            text = make_premise_text(rng)
        else:
            label = "background"
            text = make_non_premise_text(rng)
        records.append({"id": f"lab{i:05d}", "text": text, "label": label})
    return records


def build_documents(
    n_docs: int,
    seed: int,
    sentences_per_doc: tuple[int, int] = (5, 12),
    premise_rate: float = 0.3,
) -> list[Document]:
    """Unlabeled economic-news documents with ``premise_rate`` planted sentences."""
    rng = np.random.default_rng(seed)
    documents = []
    for d in range(n_docs):
        n_sentences = int(rng.integers(sentences_per_doc[0], sentences_per_doc[1] + 1))
        sentences = []
        for _ in range(n_sentences):
            if rng.random() < premise_rate:
                sentences.append(make_premise_text(rng))
            else:
                sentences.append(make_non_premise_text(rng))
        documents.append(
            Document(
                id=f"doc{d:04d}",
                text=" ".join(sentences),
                source="synthetic-news",
                date=f"2021-{int(rng.integers(1, 13)):02d}-{int(rng.integers(1, 29)):02d}",
            )
        )
    return documents


def write_labeled_jsonl(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def write_documents_jsonl(path: str | Path, documents: list[Document]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in documents:
            record = {"id": doc.id, "text": doc.text, "source": doc.source, "date": doc.date}
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
