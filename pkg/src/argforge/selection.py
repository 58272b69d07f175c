"""Confidence-based selection of self-labeled premises and causal-connective
prompt rendering.

Training lines are *prefixed* with the connective while generation prompts
are *suffixed* with it; the two renderings are deliberately separate
operations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

DEFAULT_CONNECTIVE = "потому что"


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class ScoredSentence:
    sentence_id: str
    text: str
    score: float
    rank: int = 0


@dataclass(frozen=True)
class PromptSpec:
    claim_text: str
    connective: str = DEFAULT_CONNECTIVE
    claim_id: str = ""
    gloss: str = ""

    def __post_init__(self) -> None:
        if not self.claim_text.strip():
            raise SelectionError("claim text must be non-empty")


def rank_sentences(scored: list[ScoredSentence]) -> list[ScoredSentence]:
    """Assign ranks 1..N by descending score; ties keep corpus order."""
    order = sorted(range(len(scored)), key=lambda i: (-scored[i].score, i))
    ranked = [None] * len(scored)
    for rank0, original in enumerate(order):
        item = scored[original]
        ranked[rank0] = ScoredSentence(item.sentence_id, item.text, item.score, rank=rank0 + 1)
    return ranked


def rank_and_select(
    scored: list[ScoredSentence],
    fraction: float | None = None,
    count: int | None = None,
) -> list[ScoredSentence]:
    """Take the top slice of the score ranking, by fraction or absolute count.

    Exactly one of ``fraction``/``count`` must be given. A fraction is
    rounded half-up to a count. The result is a prefix of the rank order.
    """
    if not scored:
        raise SelectionError("cannot select from an empty corpus")
    if (fraction is None) == (count is None):
        raise SelectionError("provide exactly one of fraction/count")
    n = len(scored)
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise SelectionError("fraction must be in (0, 1]")
        count = int(math.floor(fraction * n + 0.5))
        count = max(count, 1)
    if not 1 <= count <= n:
        raise SelectionError(f"count must be in [1, {n}], got {count}")
    return rank_sentences(scored)[:count]


def make_training_line(sentence_text: str, connective: str = DEFAULT_CONNECTIVE) -> str:
    """Prefix a selected premise with the causal connective, single-spaced."""
    if not sentence_text.strip():
        raise SelectionError("sentence text must be non-empty")
    return " ".join(f"{connective} {sentence_text}".split())


def make_prompt(spec: PromptSpec) -> str:
    """Suffix a claim with the causal connective, single-spaced."""
    return " ".join(f"{spec.claim_text} {spec.connective}".split())


def load_prompts(path: str | Path, connective: str = DEFAULT_CONNECTIVE) -> list[PromptSpec]:
    """Read prompting claims from TSV ``claim<TAB>gloss``; '#' comments allowed."""
    prompts = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        claim, _, gloss = stripped.partition("\t")
        prompts.append(
            PromptSpec(
                claim_text=claim.strip(),
                connective=connective,
                claim_id=f"p{len(prompts) + 1:02d}",
                gloss=gloss.strip(),
            )
        )
    return prompts


def write_selected(path: str | Path, selected: list[ScoredSentence]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for item in selected:
            record = {"id": item.sentence_id, "text": item.text, "score": item.score, "rank": item.rank}
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_selected(path: str | Path) -> list[ScoredSentence]:
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                record = json.loads(line)
                out.append(ScoredSentence(record["id"], record["text"], record["score"], record["rank"]))
    return out
