"""Blind annotation tasks, quorum voting, Krippendorff's alpha, and the
per-model premise report.

Alpha is the nominal-metric coefficient computed from the coincidence
matrix: within each unit every ordered pair of labels counts with weight
1/(m_u - 1), D_o is the off-diagonal share of the coincidence mass, D_e the
chance disagreement from the marginals n_c * n_k / (n - 1), and
alpha = 1 - D_o / D_e. Units with fewer than two labels contribute nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .ingest import NON_PREMISE, PREMISE
from .ngram import GeneratedCandidate

UNASSIGNED = "unassigned"

LABEL_VOCABULARY = (PREMISE, NON_PREMISE)

# Headline numbers of the original four-annotator study, echoed in reports
# for comparison; desk-scale runs are not expected to reproduce them.
REFERENCE_ALPHA = 0.4772
REFERENCE_RESULTS = {
    "fine_tuned": {"premise": 203, "non_premise": 118, "assigned": 321},
    "original": {"premise": 144, "non_premise": 195, "assigned": 339},
}


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationTask:
    """One claim-sentence pair shown to annotators with no model provenance."""

    task_id: str
    claim_text: str
    sentence_text: str
    hidden_provenance: str
    display_order: int

    def to_annotator_dict(self) -> dict:
        """Annotator-facing serialization; never includes the model id."""
        return {"task_id": self.task_id, "claim": self.claim_text, "sentence": self.sentence_text}


@dataclass(frozen=True)
class AnnotatorLabel:
    task_id: str
    annotator_id: str
    label: str
    timestamp: str = ""

    def __post_init__(self) -> None:
        if self.label not in LABEL_VOCABULARY:
            raise AnnotationError(f"label must be one of {LABEL_VOCABULARY}, got {self.label!r}")


@dataclass(frozen=True)
class VoteResult:
    task_id: str
    final_label: str
    vote_counts: dict[str, int]
    quorum: int


@dataclass(frozen=True)
class AgreementResult:
    alpha: float
    d_observed: float
    d_expected: float
    n_units_used: int
    interpretation: str

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "D_o": self.d_observed,
            "D_e": self.d_expected,
            "n_units_used": self.n_units_used,
            "band": self.interpretation,
        }


def build_blind_tasks(
    candidates: Sequence[GeneratedCandidate],
    claims: dict[str, str],
    seed: int,
) -> list[AnnotationTask]:
    """Shuffle candidates from several models into blinded annotation tasks.

    Task ids follow the seeded display permutation; provenance survives only
    in the ``hidden_provenance`` field, which annotator-facing serializations
    never carry.
    """
    if not candidates:
        raise AnnotationError("no candidates to annotate")
    models = {c.model_id for c in candidates}
    if len(models) < 2:
        raise AnnotationError("blind evaluation needs candidates from at least 2 models")
    for candidate in candidates:
        if candidate.prompt_id not in claims:
            raise AnnotationError(f"no claim text for prompt {candidate.prompt_id!r}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(candidates))
    tasks = []
    for position, candidate_index in enumerate(order):
        candidate = candidates[int(candidate_index)]
        tasks.append(
            AnnotationTask(
                task_id=f"t{position + 1:04d}",
                claim_text=claims[candidate.prompt_id],
                sentence_text=candidate.text,
                hidden_provenance=candidate.model_id,
                display_order=position,
            )
        )
    ids = [task.task_id for task in tasks]
    if len(ids) != len(set(ids)):
        raise AnnotationError("duplicate task ids")
    return tasks


def majority_vote(
    labels: Sequence[AnnotatorLabel],
    n_annotators: int = 4,
    quorum: int = 3,
) -> VoteResult:
    """Quorum vote over one task's labels; no quorum means UNASSIGNED."""
    if not labels:
        raise AnnotationError("no labels to vote on")
    if quorum < 1 or quorum * 2 <= n_annotators:
        raise AnnotationError("quorum must be a strict majority of the annotators")
    task_ids = {label.task_id for label in labels}
    if len(task_ids) != 1:
        raise AnnotationError(f"labels span several tasks: {sorted(task_ids)}")
    annotators = [label.annotator_id for label in labels]
    if len(annotators) != len(set(annotators)):
        raise AnnotationError(f"duplicate annotator on task {labels[0].task_id}")
    if len(annotators) > n_annotators:
        raise AnnotationError(f"more labels than annotators on task {labels[0].task_id}")
    counts = {option: 0 for option in LABEL_VOCABULARY}
    for label in labels:
        counts[label.label] += 1
    winner = max(counts, key=lambda option: counts[option])
    final = winner if counts[winner] >= quorum else UNASSIGNED
    return VoteResult(
        task_id=labels[0].task_id,
        final_label=final,
        vote_counts=counts,
        quorum=quorum,
    )


def krippendorff_alpha(matrix: Sequence[Sequence[Hashable | None]]) -> AgreementResult:
    """Nominal Krippendorff's alpha over a units x annotators label matrix.

    ``None`` marks a missing label; units with fewer than two labels are
    excluded from both disagreement terms. When every pairable label is
    identical, D_e is zero and alpha is pinned to 1.0 by convention.
    """
    pairable = [[v for v in row if v is not None] for row in matrix]
    pairable = [row for row in pairable if len(row) >= 2]
    if not pairable:
        raise AnnotationError("alpha needs at least one unit with two or more labels")

    # coincidence matrix: o[c][k] = sum over units of n_uc * (n_uk - [c==k]) / (m_u - 1);
    # its row sums equal the raw label counts, kept as exact integers below
    coincidence: dict[Hashable, dict[Hashable, float]] = {}
    marginals: dict[Hashable, int] = {}
    n = 0
    for row in pairable:
        m_u = len(row)
        n += m_u
        unit_counts: dict[Hashable, int] = {}
        for v in row:
            unit_counts[v] = unit_counts.get(v, 0) + 1
            marginals[v] = marginals.get(v, 0) + 1
        weight = 1.0 / (m_u - 1)
        for c, n_c in unit_counts.items():
            target = coincidence.setdefault(c, {})
            for k, n_k in unit_counts.items():
                target[k] = target.get(k, 0.0) + n_c * (n_k - (c == k)) * weight

    off_diagonal = sum(
        mass for c, successors in coincidence.items() for k, mass in successors.items() if c != k
    )
    observed_disagreement = off_diagonal / n
    expected_pairs = sum(
        n_c * n_k for c, n_c in marginals.items() for k, n_k in marginals.items() if c != k
    )
    expected_disagreement = expected_pairs / (n * (n - 1.0))

    if expected_disagreement == 0.0:
        alpha = 1.0
    else:
        alpha = 1.0 - observed_disagreement / expected_disagreement
    return AgreementResult(
        alpha=alpha,
        d_observed=observed_disagreement,
        d_expected=expected_disagreement,
        n_units_used=len(pairable),
        interpretation=landis_koch_band(alpha),
    )


def landis_koch_band(alpha: float) -> str:
    """Conventional interpretation bands for agreement coefficients."""
    if alpha < 0:
        return "poor"
    if alpha < 0.2:
        return "slight"
    if alpha < 0.4:
        return "fair"
    if alpha < 0.6:
        return "moderate"
    if alpha < 0.8:
        return "substantial"
    return "almost perfect"


def labels_to_matrix(labels: Sequence[AnnotatorLabel]) -> list[list[str | None]]:
    """Arrange raw labels as a units x annotators matrix for alpha."""
    annotators = sorted({label.annotator_id for label in labels})
    column = {a: i for i, a in enumerate(annotators)}
    by_task: dict[str, list[str | None]] = {}
    for label in labels:
        row = by_task.setdefault(label.task_id, [None] * len(annotators))
        if row[column[label.annotator_id]] is not None:
            raise AnnotationError(
                f"duplicate label by {label.annotator_id} on task {label.task_id}"
            )
        row[column[label.annotator_id]] = label.label
    return [by_task[task_id] for task_id in sorted(by_task)]


@dataclass(frozen=True)
class ModelAccuracy:
    model_id: str
    premise: int
    non_premise: int
    unassigned: int

    @property
    def assigned(self) -> int:
        return self.premise + self.non_premise

    @property
    def premise_rate(self) -> float | None:
        if not self.assigned:
            return None
        return self.premise / self.assigned


def model_accuracy(
    votes: Sequence[VoteResult],
    provenance: dict[str, str],
) -> dict[str, ModelAccuracy]:
    """Per-model premise / non-premise / unassigned tallies from voted tasks."""
    tallies: dict[str, dict[str, int]] = {}
    for vote in votes:
        model = provenance.get(vote.task_id)
        if model is None:
            raise AnnotationError(f"task {vote.task_id!r} not present in the provenance key")
        bucket = tallies.setdefault(model, {PREMISE: 0, NON_PREMISE: 0, UNASSIGNED: 0})
        bucket[vote.final_label] += 1
    return {
        model: ModelAccuracy(
            model_id=model,
            premise=bucket[PREMISE],
            non_premise=bucket[NON_PREMISE],
            unassigned=bucket[UNASSIGNED],
        )
        for model, bucket in sorted(tallies.items())
    }


def percent(numerator: int, denominator: int) -> float:
    """Share as a percentage rounded to one decimal, e.g. 203/321 -> 63.2."""
    if denominator == 0:
        return 0.0
    return round(100.0 * numerator / denominator, 1)


def render_report(
    votes: Sequence[VoteResult],
    provenance: dict[str, str],
    agreement: AgreementResult | None,
) -> dict:
    """Assemble the per-model results table plus the agreement block."""
    accuracies = model_accuracy(votes, provenance)
    rows = {}
    for model, acc in accuracies.items():
        rows[model] = {
            "premise": acc.premise,
            "non_premise": acc.non_premise,
            "unassigned": acc.unassigned,
            "assigned": acc.assigned,
            "premise_pct": percent(acc.premise, acc.assigned),
            "non_premise_pct": percent(acc.non_premise, acc.assigned),
        }
    total_premise = sum(acc.premise for acc in accuracies.values())
    total_non = sum(acc.non_premise for acc in accuracies.values())
    total_unassigned = sum(acc.unassigned for acc in accuracies.values())
    assigned = total_premise + total_non
    report = {
        "models": rows,
        "overall": {
            "premise": total_premise,
            "non_premise": total_non,
            "unassigned": total_unassigned,
            "assigned": assigned,
            "premise_pct": percent(total_premise, assigned),
            "assigned_pct": percent(assigned, assigned + total_unassigned),
        },
        "reference": {
            "alpha": REFERENCE_ALPHA,
            "alpha_band": landis_koch_band(REFERENCE_ALPHA),
            "results": REFERENCE_RESULTS,
        },
    }
    if agreement is not None:
        report["agreement"] = agreement.to_dict()
    return report


def write_tasks(path: str | Path, tasks: Sequence[AnnotationTask]) -> None:
    """Annotator-facing tasks file: strictly {task_id, claim, sentence}."""
    with open(path, "w", encoding="utf-8") as handle:
        for task in sorted(tasks, key=lambda t: t.display_order):
            handle.write(json.dumps(task.to_annotator_dict(), ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def write_key(path: str | Path, tasks: Sequence[AnnotationTask]) -> None:
    """Evaluator-only provenance key: {task_id, model_id}."""
    with open(path, "w", encoding="utf-8") as handle:
        for task in sorted(tasks, key=lambda t: t.display_order):
            record = {"task_id": task.task_id, "model_id": task.hidden_provenance}
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")


def read_key(path: str | Path) -> dict[str, str]:
    key = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                record = json.loads(line)
                key[record["task_id"]] = record["model_id"]
    return key


def read_tasks(path: str | Path) -> list[dict]:
    tasks = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                tasks.append(json.loads(line))
    return tasks


def write_labels(path: str | Path, labels: Sequence[AnnotatorLabel]) -> None:
    """Labels file: TSV task_id, annotator_id, label, timestamp."""
    with open(path, "w", encoding="utf-8") as handle:
        for label in labels:
            handle.write(f"{label.task_id}\t{label.annotator_id}\t{label.label}\t{label.timestamp}\n")


def read_labels(path: str | Path) -> list[AnnotatorLabel]:
    labels = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise AnnotationError(f"{path}: line {lineno}: expected task, annotator, label")
        timestamp = parts[3] if len(parts) > 3 else ""
        labels.append(AnnotatorLabel(parts[0], parts[1], parts[2], timestamp))
    return labels


def group_labels(labels: Sequence[AnnotatorLabel]) -> dict[str, list[AnnotatorLabel]]:
    grouped: dict[str, list[AnnotatorLabel]] = {}
    for label in labels:
        grouped.setdefault(label.task_id, []).append(label)
    return grouped
