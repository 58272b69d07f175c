"""Sentence featurization: marker-lexicon counts, punctuation counts, and
POS-n-gram plus verb-grammar counts.

The feature space is [lexical block | punctuation block | morphosyntactic
block]. The morphosyntactic block is fixed at 783 features: 775 part-of-speech
n-grams (5^2 + 5^3 + 5^4 over the five content classes) plus 8 verb-grammar
slots (3 tense + 3 person + 2 mood).
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import Sentence, tokenize
from .tagging import CONTENT_CLASSES, VERB, PosTag

PUNCT_CHARS = ((",", "punct_comma"), (":", "punct_colon"), (";", "punct_semicolon"),
               ("?", "punct_question"), ("!", "punct_exclamation"))

VERB_FEATURES = (
    "verb_tense_past", "verb_tense_present", "verb_tense_future",
    "verb_person_1", "verb_person_2", "verb_person_3",
    "verb_mood_indicative", "verb_mood_imperative",
)

NGRAM_LENGTHS = (2, 3, 4)

POSGRAM_BLOCK = sum(len(CONTENT_CLASSES) ** n for n in NGRAM_LENGTHS)  # 775
MORPHOSYNTACTIC_BLOCK = POSGRAM_BLOCK + len(VERB_FEATURES)  # 783
PUNCT_BLOCK = len(PUNCT_CHARS)  # 5


class FeatureError(ValueError):
    """Schema/lexicon mismatch or malformed lexicon file."""


@dataclass(frozen=True)
class MarkerLexicon:
    """Ordered registry of discourse-marker and modal-word phrases.

    Each entry is a lowercase token sequence paired with a unique feature
    name; the entry count defines the lexical feature dimension.
    """

    entries: tuple[tuple[tuple[str, ...], str], ...]

    def __post_init__(self) -> None:
        names = [name for _, name in self.entries]
        if len(names) != len(set(names)):
            raise FeatureError("marker lexicon feature names must be unique")
        for phrase, name in self.entries:
            if not phrase:
                raise FeatureError(f"marker {name!r}: empty phrase")

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_pairs(cls, pairs: list[tuple[str, str]]) -> "MarkerLexicon":
        entries = []
        for phrase, name in pairs:
            tokens = tuple(token.lower() for token in tokenize(phrase))
            entries.append((tokens, name))
        return cls(entries=tuple(entries))

    @classmethod
    def from_tsv(cls, path: str | Path) -> "MarkerLexicon":
        """Read a marker lexicon: TSV ``phrase<TAB>feature_name``, '#' comments."""
        pairs = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FeatureError(f"{path}: line {lineno}: expected phrase<TAB>feature_name")
            pairs.append((parts[0], parts[1]))
        return cls.from_pairs(pairs)


def _posgram_names() -> tuple[str, ...]:
    names = []
    for n in NGRAM_LENGTHS:
        for combo in itertools.product(CONTENT_CLASSES, repeat=n):
            names.append("pos_" + "+".join(combo))
    return tuple(names)


_POSGRAM_NAMES = _posgram_names()


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature-name registry; position in ``names`` is the feature index."""

    names: tuple[str, ...]
    lexical_size: int
    schema_id: str = field(default="")

    def __post_init__(self) -> None:
        expected = self.lexical_size + PUNCT_BLOCK + MORPHOSYNTACTIC_BLOCK
        if len(self.names) != expected:
            raise FeatureError(
                f"schema has {len(self.names)} features, expected {expected}"
            )
        if not self.schema_id:
            object.__setattr__(self, "schema_id", schema_digest(self.names))

    @property
    def dimension(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise FeatureError(f"unknown feature {name!r}") from None

    @classmethod
    def for_lexicon(cls, lexicon: MarkerLexicon) -> "FeatureSchema":
        lexical = tuple(name for _, name in lexicon.entries)
        punct = tuple(name for _, name in PUNCT_CHARS)
        names = lexical + punct + _POSGRAM_NAMES + VERB_FEATURES
        return cls(names=names, lexical_size=len(lexical))


def schema_digest(names: tuple[str, ...]) -> str:
    payload = "\n".join(names).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureVector:
    """Sparse count vector; absent index means zero."""

    schema_id: str
    counts: dict[int, int]

    def to_dense(self, dimension: int) -> np.ndarray:
        dense = np.zeros(dimension, dtype=np.float64)
        for index, count in self.counts.items():
            if index >= dimension:
                raise FeatureError(f"feature index {index} outside dimension {dimension}")
            dense[index] = count
        return dense


def extract_lexical(tokens, lexicon: MarkerLexicon) -> dict[str, int]:
    """Count non-overlapping, leftmost-greedy occurrences of each marker phrase.

    Matching is on lowercase token forms; each phrase is counted
    independently of the others.
    """
    lowered = [token.lower() for token in tokens]
    counts: dict[str, int] = {}
    for phrase, name in lexicon.entries:
        total = 0
        i = 0
        limit = len(lowered) - len(phrase)
        while i <= limit:
            if tuple(lowered[i:i + len(phrase)]) == phrase:
                total += 1
                i += len(phrase)
            else:
                i += 1
        if total:
            counts[name] = total
    return counts


def extract_punct(tokens) -> dict[str, int]:
    """Count the five clause-structure punctuation characters among the tokens."""
    counts: dict[str, int] = {}
    for char, name in PUNCT_CHARS:
        total = sum(token.count(char) for token in tokens)
        if total:
            counts[name] = total
    return counts


def extract_morphosyntactic(tags: list[PosTag]) -> dict[str, int]:
    """Count POS n-grams over the content-class-filtered tag sequence plus verb grammar.

    Non-content tags are transparent: the n-grams run over the filtered
    sequence, so e.g. NOUN OTHER VERB still yields the NOUN+VERB bigram.
    """
    counts: dict[str, int] = {}
    filtered = [tag.pos for tag in tags if tag.pos in CONTENT_CLASSES]
    for n in NGRAM_LENGTHS:
        for start in range(len(filtered) - n + 1):
            name = "pos_" + "+".join(filtered[start:start + n])
            counts[name] = counts.get(name, 0) + 1
    for tag in tags:
        if tag.pos != VERB:
            continue
        for name in _verb_slots(tag):
            counts[name] = counts.get(name, 0) + 1
    return counts


def _verb_slots(tag: PosTag) -> list[str]:
    slots = []
    if tag.tense:
        slots.append(f"verb_tense_{tag.tense}")
    if tag.person:
        slots.append(f"verb_person_{tag.person}")
    if tag.mood:
        slots.append(f"verb_mood_{tag.mood}")
    return slots


def featurize(
    sentence: Sentence,
    schema: FeatureSchema,
    lexicon: MarkerLexicon,
    tagger,
    binary: bool = False,
) -> FeatureVector:
    """Build the full feature vector for one sentence.

    The schema must have been built from the same lexicon. With
    ``binary=True`` counts are clipped to presence indicators.
    """
    lexical_names = tuple(name for _, name in lexicon.entries)
    if schema.names[:schema.lexical_size] != lexical_names:
        raise FeatureError("schema was not built from this marker lexicon")

    named: dict[str, int] = {}
    named.update(extract_lexical(sentence.tokens, lexicon))
    named.update(extract_punct(sentence.tokens))
    named.update(extract_morphosyntactic(tagger.tag(list(sentence.tokens))))

    index = {name: i for i, name in enumerate(schema.names)}
    counts = {}
    for name, count in named.items():
        counts[index[name]] = min(count, 1) if binary else count
    return FeatureVector(schema_id=schema.schema_id, counts=counts)


def vectors_to_matrix(vectors: list[FeatureVector], schema: FeatureSchema) -> np.ndarray:
    """Stack sparse vectors into a dense design matrix, checking schema identity."""
    matrix = np.zeros((len(vectors), schema.dimension), dtype=np.float64)
    for row, vector in enumerate(vectors):
        if vector.schema_id != schema.schema_id:
            raise FeatureError(
                f"row {row}: vector schema {vector.schema_id} != {schema.schema_id}"
            )
        for index, count in vector.counts.items():
            matrix[row, index] = count
    return matrix


def format_sparse_row(sentence_id: str, vector: FeatureVector) -> str:
    """One line of the feature-matrix export: id then index:count pairs."""
    pairs = " ".join(f"{i}:{vector.counts[i]}" for i in sorted(vector.counts))
    return f"{sentence_id} {pairs}".rstrip()


def parse_sparse_row(line: str, schema_id: str) -> tuple[str, FeatureVector]:
    parts = line.split()
    counts = {}
    for pair in parts[1:]:
        index, _, count = pair.partition(":")
        counts[int(index)] = int(count)
    return parts[0], FeatureVector(schema_id=schema_id, counts=counts)
