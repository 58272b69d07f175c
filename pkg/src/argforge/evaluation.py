"""Stratified k-fold cross-validation with nested hyperparameter search and
macro-averaged metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .gbdt import TrainConfig, train_gbdt


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    """Partition of example ids into k folds, class-stratified by round-robin."""

    k: int
    assignments: dict[str, int]
    seed: int

    def fold_of(self, example_id: str) -> int:
        return self.assignments[example_id]

    def test_ids(self, fold: int) -> list[str]:
        return [eid for eid, f in self.assignments.items() if f == fold]


@dataclass(frozen=True)
class Metrics:
    """Macro-averaged scores for one prediction set.

    Per-class precision/recall/F1 use the 0/0 -> 0 convention so tiny
    fixtures with an unpredicted class stay well-defined; macro values are
    unweighted means over the classes.
    """

    macro_f1: float
    macro_precision: float
    macro_recall: float
    accuracy: float
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "accuracy": self.accuracy,
            "per_class": self.per_class,
        }


@dataclass(frozen=True)
class MetricReport:
    """Per-fold metrics plus mean and sample (n-1) standard deviation."""

    per_fold: tuple[Metrics, ...]
    chosen_configs: tuple[TrainConfig, ...]

    def summary(self) -> dict[str, dict[str, float]]:
        out = {}
        for key in ("macro_f1", "macro_precision", "macro_recall", "accuracy"):
            values = np.array([getattr(m, key) for m in self.per_fold], dtype=np.float64)
            std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            out[key] = {"mean": float(values.mean()), "std": std}
        return out

    def to_dict(self) -> dict:
        return {
            "folds": [m.to_dict() for m in self.per_fold],
            "chosen_configs": [c.to_dict() for c in self.chosen_configs],
            "summary": self.summary(),
        }


def stratified_kfold(ids: Sequence[str], labels: Sequence, k: int, seed: int) -> FoldPlan:
    """Assign ids to k folds: deterministic shuffle by seed, round-robin per class."""
    if k < 2:
        raise EvaluationError("k must be >= 2")
    if len(ids) != len(labels):
        raise EvaluationError("ids and labels must align")
    by_class: dict = {}
    for eid, label in zip(ids, labels):
        by_class.setdefault(label, []).append(eid)
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    for label in sorted(by_class, key=str):
        members = by_class[label]
        if len(members) < k:
            raise EvaluationError(f"class {label!r} has {len(members)} members, fewer than k={k}")
        order = rng.permutation(len(members))
        for position, member_index in enumerate(order):
            assignments[members[member_index]] = position % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def compute_metrics(predictions: Sequence, golds: Sequence) -> Metrics:
    """Per-class precision/recall/F1 and accuracy over one prediction set."""
    if len(predictions) != len(golds):
        raise EvaluationError("predictions and golds must have equal length")
    if not golds:
        raise EvaluationError("cannot compute metrics on empty input")
    classes = sorted(set(golds) | set(predictions), key=str)
    per_class = {}
    for cls in classes:
        tp = sum(1 for p, g in zip(predictions, golds) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(predictions, golds) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(predictions, golds) if p != cls and g == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[str(cls)] = {"precision": precision, "recall": recall, "f1": f1}
    accuracy = sum(1 for p, g in zip(predictions, golds) if p == g) / len(golds)
    values = list(per_class.values())
    return Metrics(
        macro_f1=float(np.mean([v["f1"] for v in values])),
        macro_precision=float(np.mean([v["precision"] for v in values])),
        macro_recall=float(np.mean([v["recall"] for v in values])),
        accuracy=accuracy,
        per_class=per_class,
    )


def _evaluate_config(
    matrix: np.ndarray,
    labels: np.ndarray,
    ids: list[str],
    config: TrainConfig,
    k: int,
    seed: int,
) -> float:
    """Mean macro F1 of one config under a k-fold split of the given data."""
    plan = stratified_kfold(ids, labels.tolist(), k, seed)
    position = {eid: i for i, eid in enumerate(ids)}
    scores = []
    for fold in range(k):
        test_rows = np.array([position[eid] for eid in plan.test_ids(fold)], dtype=np.int64)
        train_mask = np.ones(len(ids), dtype=bool)
        train_mask[test_rows] = False
        model = train_gbdt(matrix[train_mask], labels[train_mask], config)
        predicted = (model.predict_proba(matrix[test_rows]) >= 0.5).astype(np.int64)
        scores.append(compute_metrics(predicted.tolist(), labels[test_rows].astype(np.int64).tolist()).macro_f1)
    return float(np.mean(scores))


def nested_grid_search(
    matrix: np.ndarray,
    labels: np.ndarray,
    ids: list[str],
    grid: Sequence[TrainConfig],
    inner_k: int = 4,
    seed: int = 0,
) -> TrainConfig:
    """Pick the config maximizing inner-CV macro F1; ties go to grid order."""
    if not grid:
        raise EvaluationError("hyperparameter grid must be non-empty")
    best_config = None
    best_score = -np.inf
    for config in grid:
        score = _evaluate_config(matrix, labels, ids, config, inner_k, seed)
        if score > best_score:
            best_score = score
            best_config = config
    return best_config


def cross_validate(
    matrix: np.ndarray,
    labels: Sequence[int],
    ids: Sequence[str] | None = None,
    k: int = 5,
    grid: Sequence[TrainConfig] | None = None,
    config: TrainConfig | None = None,
    inner_k: int = 4,
    seed: int = 0,
) -> MetricReport:
    """Outer k-fold evaluation; hyperparameters come from ``config`` or from a
    nested inner-CV grid search run inside every outer training fold."""
    if (grid is None) == (config is None):
        raise EvaluationError("provide exactly one of grid/config")
    matrix = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    id_list = list(ids) if ids is not None else [str(i) for i in range(len(y))]
    plan = stratified_kfold(id_list, y.tolist(), k, seed)
    position = {eid: i for i, eid in enumerate(id_list)}

    per_fold = []
    chosen = []
    for fold in range(k):
        test_rows = np.array(sorted(position[eid] for eid in plan.test_ids(fold)), dtype=np.int64)
        train_mask = np.ones(len(id_list), dtype=bool)
        train_mask[test_rows] = False
        train_rows = np.nonzero(train_mask)[0]
        if grid is not None:
            fold_config = nested_grid_search(
                matrix[train_rows],
                y[train_rows],
                [id_list[i] for i in train_rows],
                grid,
                inner_k=inner_k,
                seed=seed + fold + 1,
            )
        else:
            fold_config = config
        chosen.append(fold_config)
        model = train_gbdt(matrix[train_rows], y[train_rows], fold_config)
        predicted = (model.predict_proba(matrix[test_rows]) >= 0.5).astype(np.int64)
        per_fold.append(compute_metrics(predicted.tolist(), y[test_rows].astype(np.int64).tolist()))
    return MetricReport(per_fold=tuple(per_fold), chosen_configs=tuple(chosen))
