#!/usr/bin/env python3
"""Feature extraction and the boosted-tree premise classifier.

The feature space is [marker lexicon | 5 punctuation counts | 783
morphosyntactic features] where 783 = 775 POS n-grams + 8 verb-grammar
slots. With the published 255-marker inventory the total would be 1,043.

Run: python3 demos/02_features_and_classifier.py
"""

import numpy as np

import argforge
from argforge.evaluation import cross_validate
from argforge.features import FeatureSchema, MarkerLexicon, featurize, vectors_to_matrix
from argforge.gbdt import TrainConfig, train_gbdt
from argforge.ingest import LabelMapRule, load_labeled_corpus
from argforge.synthetic import build_labeled_records, write_labeled_jsonl
from argforge.tagging import LexiconTagger, load_pos_lexicon
import tempfile
from pathlib import Path

lexicon = MarkerLexicon.from_tsv(argforge.data_path("markers_ru.tsv"))
schema = FeatureSchema.for_lexicon(lexicon)
tagger = LexiconTagger(load_pos_lexicon(argforge.data_path("pos_lexicon_ru.tsv")))

print("=== feature schema ===")
print(f"  markers: {len(lexicon)}  punctuation: 5  morphosyntactic: 783")
print(f"  total dimension: {schema.dimension}  schema id: {schema.schema_id}")

print("\n=== one sentence, named non-zero features ===")
from argforge.ingest import Sentence, tokenize

text = "Поэтому банки считают, что ставки выросли!"
sentence = Sentence(id="s", doc_id="d", index_in_doc=0, text=text, tokens=tuple(tokenize(text)))
vector = featurize(sentence, schema, lexicon, tagger)
for index in sorted(vector.counts):
    print(f"  {schema.names[index]:32} = {vector.counts[index]}")

print("\n=== train and cross-validate on a planted-signal corpus ===")
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "labeled.jsonl"
    write_labeled_jsonl(path, build_labeled_records(600, seed=3))
    rules = [
        LabelMapRule("argument", "premise"),
        LabelMapRule("background", "non_premise"),
        LabelMapRule("heading", "exclude"),
    ]
    labeled, _ = load_labeled_corpus(path, rules)
    vectors = [featurize(s, schema, lexicon, tagger) for s in labeled]
    matrix = vectors_to_matrix(vectors, schema)
    labels = np.array([1 if s.gold_label == "premise" else 0 for s in labeled])

    report = cross_validate(matrix, labels, k=5, config=TrainConfig(n_trees=25, max_depth=3), seed=0)
    summary = report.summary()
    for metric, stats in summary.items():
        print(f"  {metric:16} {stats['mean']:.4f} ± {stats['std']:.4f}")

    model = train_gbdt(matrix, labels, TrainConfig(n_trees=25, max_depth=3))
    proba = model.predict_proba(matrix[:4])
    for s, p in zip(labeled[:4], proba):
        print(f"  P(premise)={p:.3f}  [{s.gold_label:12}] {s.text[:60]}")
