#!/usr/bin/env python3
"""Corpus preprocessing walkthrough: segmentation, tokenization, tail
filtering, deduplication, and label mapping.

Run: python3 demos/01_corpus_preprocessing.py
"""

import tempfile
from pathlib import Path

import argforge
from argforge.ingest import (
    Document,
    LabelMapRule,
    dedup,
    length_filter,
    load_abbreviations,
    load_labeled_corpus,
    segment,
    tokenize,
)
from argforge.synthetic import build_labeled_records, write_labeled_jsonl

print("=== tokenization ===")
for text in ("Банки, рады!", "ставка 7.5%", "Т.е. ставки выросли."):
    print(f"  {text!r} -> {tokenize(text)}")

print("\n=== segmentation with the abbreviation lexicon ===")
abbreviations = load_abbreviations(argforge.data_path("abbreviations_ru.txt"))
doc = Document(
    id="news-1",
    text="Ставка выросла до 100 руб. Это заметный рост! Т.е. вкладчики довольны. Конец.",
)
for sentence in segment(doc, abbreviations):
    print(f"  [{sentence.index_in_doc}] {sentence.text}")
print("  (without the lexicon 'руб.' would have been treated as a sentence end)")
print(f"  naive split count: {len(segment(doc))}")

print("\n=== length-tail filtering: drop floor(10%·N) per tail ===")
docs = [
    Document(id=f"d{i}", text=" ".join(["слово"] * n) + ".")
    for i, n in enumerate([1, 3, 4, 5, 6, 7, 8, 9, 10, 30])
]
sentences = [s for d in docs for s in segment(d)]
survivors = length_filter(sentences, 0.10, 0.10)
print(f"  {len(sentences)} sentences -> {len(survivors)} after dropping extremes")
print(f"  shortest kept: {min(len(s.tokens) for s in survivors)} tokens;"
      f" longest kept: {max(len(s.tokens) for s in survivors)} tokens")

print("\n=== dedup keeps first occurrences, whitespace-normalized ===")
noisy = sentences + sentences[:3]
print(f"  {len(noisy)} -> {len(dedup(noisy))}")

print("\n=== labeled corpus loading with label-map rules ===")
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "labeled.jsonl"
    write_labeled_jsonl(path, build_labeled_records(200, seed=1))
    rules = [
        LabelMapRule("argument", "premise"),
        LabelMapRule("background", "non_premise"),
        LabelMapRule("heading", "exclude"),  # headings never enter training
    ]
    loaded, counts = load_labeled_corpus(path, rules)
    print(f"  loaded {len(loaded)} sentences; counts: {counts}")
    print(f"  example premise: {next(s.text for s in loaded if s.gold_label == 'premise')!r}")
