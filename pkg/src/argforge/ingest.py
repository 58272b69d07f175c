"""Corpus ingestion: segmentation, tokenization, tail filtering, dedup, label mapping.

Raw documents and annotated corpora arrive in a normalized JSONL interchange
format; everything downstream works on :class:`Sentence` records.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

PREMISE = "premise"
NON_PREMISE = "non_premise"
EXCLUDE = "exclude"

BINARY_LABELS = (PREMISE, NON_PREMISE)
RULE_TARGETS = (PREMISE, NON_PREMISE, EXCLUDE)

# Maximal runs of letters/digits, otherwise one non-space character per token.
_TOKEN_RE = re.compile(r"[^\W_]+|\S", re.UNICODE)

_TERMINATORS = frozenset(".!?")


class CorpusError(ValueError):
    """Malformed corpus file, unmappable label, or broken record invariant."""


@dataclass(frozen=True)
class Document:
    """A raw source text, the unit of segmentation."""

    id: str
    text: str
    source: str = ""
    date: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.text:
            raise CorpusError(f"document {self.id!r}: text must be non-empty")


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence with provenance and an optional gold label."""

    id: str
    doc_id: str
    index_in_doc: int
    text: str
    tokens: tuple[str, ...]
    gold_label: str | None = None
    topic: str | None = None

    def __post_init__(self) -> None:
        if self.index_in_doc < 0:
            raise CorpusError(f"sentence {self.id!r}: negative index_in_doc")
        if self.gold_label is not None and self.gold_label not in BINARY_LABELS:
            raise CorpusError(f"sentence {self.id!r}: bad gold label {self.gold_label!r}")


@dataclass(frozen=True)
class LabelMapRule:
    """Maps one source-corpus label onto the binary scheme (or drops it)."""

    source_label: str
    target: str

    def __post_init__(self) -> None:
        if self.target not in RULE_TARGETS:
            raise CorpusError(f"rule for {self.source_label!r}: bad target {self.target!r}")


def tokenize(text: str) -> list[str]:
    """Split text into maximal alphanumeric runs and single punctuation characters.

    Case is preserved; the segmenter needs it for its uppercase rule, and
    feature lookup lowercases on its own.
    """
    return _TOKEN_RE.findall(text)


def segment(document: Document, abbreviations: frozenset[str] | set[str] = frozenset()) -> list[Sentence]:
    """Split a document into sentences on terminator + whitespace + uppercase.

    A split is suppressed when the terminator ends a token found in the
    abbreviation set (compared lowercase, e.g. "т.е."). Joining the emitted
    sentence texts and collapsing whitespace reproduces the collapsed input.
    """
    text = document.text
    cuts = [0]
    for match in re.finditer(r"[.!?]", text):
        end = match.end()
        after = end
        while after < len(text) and text[after].isspace():
            after += 1
        if after == end or after >= len(text) or not text[after].isupper():
            continue
        start = match.start()
        while start > 0 and not text[start - 1].isspace():
            start -= 1
        if text[start:end].lower() in abbreviations:
            continue
        cuts.append(end)
    cuts.append(len(text))

    sentences = []
    for left, right in zip(cuts, cuts[1:]):
        piece = text[left:right].strip()
        if not piece:
            continue
        tokens = tokenize(piece)
        if not tokens:
            continue
        index = len(sentences)
        sentences.append(
            Sentence(
                id=f"{document.id}:{index}",
                doc_id=document.id,
                index_in_doc=index,
                text=piece,
                tokens=tuple(tokens),
            )
        )
    return sentences


def length_filter(
    sentences: list[Sentence],
    lower_frac: float = 0.10,
    upper_frac: float = 0.10,
) -> list[Sentence]:
    """Drop the shortest and longest tails of the token-length ranking.

    Exactly floor(lower_frac*N) sentences are removed from the short end and
    floor(upper_frac*N) from the long end. The ranking is a stable sort by
    token count (corpus order breaks ties); survivors come back in corpus
    order.
    """
    if lower_frac < 0 or upper_frac < 0 or lower_frac + upper_frac >= 1:
        raise ValueError("tail fractions must be non-negative and sum to < 1")
    n = len(sentences)
    n_low = int(lower_frac * n)
    n_high = int(upper_frac * n)
    ranking = sorted(range(n), key=lambda i: len(sentences[i].tokens))
    dropped = set(ranking[:n_low])
    if n_high:
        dropped.update(ranking[n - n_high:])
    return [s for i, s in enumerate(sentences) if i not in dropped]


def _normalized(text: str) -> str:
    return " ".join(text.split())


def dedup(sentences: list[Sentence]) -> list[Sentence]:
    """Remove exact duplicates of whitespace-collapsed text, keeping first occurrences.

    Comparison is case-sensitive; no fuzzy matching.
    """
    seen: set[str] = set()
    kept = []
    for sentence in sentences:
        key = _normalized(sentence.text)
        if key in seen:
            continue
        seen.add(key)
        kept.append(sentence)
    return kept


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Read an abbreviation lexicon: one lowercase abbreviation per line, '#' comments."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entries.add(line.lower())
    return frozenset(entries)


def load_labeled_corpus(
    path: str | Path,
    rules: list[LabelMapRule],
) -> tuple[list[Sentence], dict[str, int]]:
    """Load a labeled-corpus JSONL file and map source labels onto the binary scheme.

    Records whose rule says ``exclude`` are dropped. Returns the surviving
    sentences plus per-class counts {premise, non_premise, excluded}.
    """
    rule_map = {}
    for rule in rules:
        if rule.source_label in rule_map:
            raise CorpusError(f"duplicate rule for source label {rule.source_label!r}")
        rule_map[rule.source_label] = rule.target

    sentences: list[Sentence] = []
    counts = {PREMISE: 0, NON_PREMISE: 0, "excluded": 0}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({err.msg})") from err
            if not isinstance(record, dict):
                raise CorpusError(f"{path}: line {lineno}: record is not an object")
            missing = [key for key in ("id", "text", "label") if key not in record]
            if missing:
                raise CorpusError(f"{path}: line {lineno}: missing keys {missing}")
            if not str(record["text"]).strip():
                raise CorpusError(f"{path}: line {lineno}: empty text")
            label = str(record["label"])
            if label not in rule_map:
                raise CorpusError(f"{path}: line {lineno}: no rule for source label {label!r}")
            target = rule_map[label]
            if target == EXCLUDE:
                counts["excluded"] += 1
                continue
            counts[target] += 1
            text = str(record["text"])
            sentences.append(
                Sentence(
                    id=str(record["id"]),
                    doc_id=str(record.get("doc_id", record["id"])),
                    index_in_doc=0,
                    text=text,
                    tokens=tuple(tokenize(text)),
                    gold_label=target,
                    topic=record.get("topic"),
                )
            )
    return sentences, counts


def read_documents(path: str | Path) -> list[Document]:
    """Read raw documents from JSONL: {id, text, source?, date?}."""
    documents = []
    ids = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({err.msg})") from err
            try:
                doc = Document(
                    id=str(record["id"]),
                    text=str(record["text"]),
                    source=str(record.get("source", "")),
                    date=record.get("date"),
                )
            except KeyError as err:
                raise CorpusError(f"{path}: line {lineno}: missing key {err}") from err
            if doc.id in ids:
                raise CorpusError(f"{path}: line {lineno}: duplicate document id {doc.id!r}")
            ids.add(doc.id)
            documents.append(doc)
    return documents


def sentence_to_record(sentence: Sentence) -> dict:
    record = {
        "id": sentence.id,
        "doc_id": sentence.doc_id,
        "index_in_doc": sentence.index_in_doc,
        "text": sentence.text,
        "tokens": list(sentence.tokens),
    }
    if sentence.gold_label is not None:
        record["gold_label"] = sentence.gold_label
    if sentence.topic is not None:
        record["topic"] = sentence.topic
    return record


def sentence_from_record(record: dict) -> Sentence:
    return Sentence(
        id=record["id"],
        doc_id=record["doc_id"],
        index_in_doc=record["index_in_doc"],
        text=record["text"],
        tokens=tuple(record["tokens"]),
        gold_label=record.get("gold_label"),
        topic=record.get("topic"),
    )


def write_corpus(path: str | Path, sentences: list[Sentence]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sentence in sentences:
            handle.write(json.dumps(sentence_to_record(sentence), ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_corpus(path: str | Path) -> list[Sentence]:
    sentences = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                sentences.append(sentence_from_record(json.loads(line)))
    return sentences


def relabel(sentence: Sentence, gold_label: str | None) -> Sentence:
    return replace(sentence, gold_label=gold_label)
