"""Per-corpus label schemes and converters onto the binary premise scheme.

The three source corpora use different annotation vocabularies; each gets a
rule set mapping it onto {premise, non_premise, exclude} plus a converter
that normalizes already-parsed records into the labeled-corpus JSONL shape
{id, text, label, topic?}. Parsing the original XML/TSV distributions is out
of scope; the converters start from plain dict records.
"""

from __future__ import annotations

from .ingest import EXCLUDE, NON_PREMISE, PREMISE, CorpusError, LabelMapRule

# Microtext corpus: every annotated discourse unit argues for or against the
# text's claim; the claim row itself carries no premise value.
ARGMICRO_RULES = [
    LabelMapRule("pro", PREMISE),
    LabelMapRule("opp", PREMISE),
    LabelMapRule("claim", EXCLUDE),
    LabelMapRule("non_premise", NON_PREMISE),
]

# Persuasive essays: main claims are dropped, claims and premises both count
# as premises, neutral elements as non-premises.
PERSESSAYS_RULES = [
    LabelMapRule("major_claim", EXCLUDE),
    LabelMapRule("claim", PREMISE),
    LabelMapRule("premise", PREMISE),
    LabelMapRule("neutral", NON_PREMISE),
]

# Sentential argument corpus: per-topic stance labels; both stances are
# premises with respect to the topic.
UKP_RULES = [
    LabelMapRule("for", PREMISE),
    LabelMapRule("against", PREMISE),
    LabelMapRule("non_premise", NON_PREMISE),
]

_RULES = {
    "argmicro": ARGMICRO_RULES,
    "persessays": PERSESSAYS_RULES,
    "ukp": UKP_RULES,
}


def label_rules_for(corpus: str) -> list[LabelMapRule]:
    """Rule set for one of the known source corpora (argmicro, persessays, ukp)."""
    try:
        return list(_RULES[corpus.lower()])
    except KeyError:
        raise CorpusError(
            f"unknown corpus {corpus!r}; expected one of {sorted(_RULES)}"
        ) from None


def drop_cross_topic_conflicts(records: list[dict]) -> tuple[list[dict], int]:
    """Remove sentences annotated differently under different topics.

    The sentential corpus repeats a sentence per topic; where those
    annotations disagree, every occurrence of the sentence is excluded.
    Returns the surviving records and the number dropped.
    """
    labels_by_text: dict[str, set[str]] = {}
    for record in records:
        labels_by_text.setdefault(record["text"], set()).add(str(record["label"]))
    conflicted = {text for text, labels in labels_by_text.items() if len(labels) > 1}
    kept = [record for record in records if record["text"] not in conflicted]
    return kept, len(records) - len(kept)


def normalize_records(
    records: list[dict],
    corpus: str,
    id_prefix: str | None = None,
) -> list[dict]:
    """Normalize parsed per-corpus records into the labeled-corpus JSONL shape.

    Input records need {id, text, label} and may carry {topic}. The
    sentential corpus additionally gets its cross-topic conflicts dropped.
    Label validity is checked against the corpus rule set here; the actual
    premise / non-premise mapping happens in load_labeled_corpus.
    """
    known = {rule.source_label for rule in label_rules_for(corpus)}
    prefix = id_prefix if id_prefix is not None else f"{corpus.lower()}-"
    if corpus.lower() == "ukp":
        records, _ = drop_cross_topic_conflicts(records)
    normalized = []
    for record in records:
        label = str(record["label"])
        if label not in known:
            raise CorpusError(f"{corpus}: record {record.get('id')!r} has unknown label {label!r}")
        entry = {
            "id": f"{prefix}{record['id']}",
            "text": str(record["text"]),
            "label": label,
        }
        if record.get("topic") is not None:
            entry["topic"] = record["topic"]
        normalized.append(entry)
    return normalized
