"""Gradient-boosted decision trees with logistic loss, trained from scratch.

Each boosting round fits a regression tree to the negative gradients
r_i = y_i - sigmoid(F_i) using exact greedy variance-reduction splits over
sorted unique feature values; leaf values are damped Newton steps
sum(r) / (sum(h) + lambda) with h = p(1-p). Training is deterministic:
no subsampling, ties broken by lowest feature index then lowest threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import FeatureSchema, FeatureVector, vectors_to_matrix

MODEL_FORMAT_VERSION = 1

_LOSS_TOLERANCE = 1e-9
_PROBA_FLOOR = 1e-15


class TrainingError(ValueError):
    """Bad training inputs or a violated training invariant."""


class ModelFormatError(ValueError):
    """Unreadable or version-incompatible model payload."""


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int
    max_depth: int
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    l2_leaf_reg: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise TrainingError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise TrainingError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise TrainingError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise TrainingError("min_samples_leaf must be >= 1")
        if self.l2_leaf_reg <= 0:
            raise TrainingError("l2_leaf_reg must be positive")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_samples_leaf": self.min_samples_leaf,
            "l2_leaf_reg": self.l2_leaf_reg,
            "seed": self.seed,
        }


class DecisionTree:
    """Axis-aligned regression tree. Routing rule: go left when x[feature] < threshold."""

    def __init__(self, nodes: list[dict]):
        if not nodes:
            raise ModelFormatError("tree must have at least one node")
        self.nodes = nodes
        self._feature = np.array([n.get("feature", -1) for n in nodes], dtype=np.int64)
        self._threshold = np.array([n.get("threshold", 0.0) for n in nodes], dtype=np.float64)
        self._left = np.array([n.get("left", -1) for n in nodes], dtype=np.int64)
        self._right = np.array([n.get("right", -1) for n in nodes], dtype=np.int64)
        self._value = np.array([n.get("value", 0.0) for n in nodes], dtype=np.float64)
        self._is_leaf = np.array(["value" in n for n in nodes], dtype=bool)

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        current = np.zeros(matrix.shape[0], dtype=np.int64)
        rows = np.arange(matrix.shape[0])
        while True:
            at_leaf = self._is_leaf[current]
            if at_leaf.all():
                break
            feature = self._feature[current]
            go_left = matrix[rows, np.maximum(feature, 0)] < self._threshold[current]
            step = np.where(go_left, self._left[current], self._right[current])
            current = np.where(at_leaf, current, step)
        return self._value[current]

    def depth(self) -> int:
        def walk(index: int) -> int:
            node = self.nodes[index]
            if "value" in node:
                return 0
            return 1 + max(walk(node["left"]), walk(node["right"]))

        return walk(0)


@dataclass(frozen=True)
class TreeEnsemble:
    """Boosted ensemble: prediction = sigmoid(base_score + learning_rate * sum of trees)."""

    base_score: float
    trees: tuple[DecisionTree, ...]
    learning_rate: float
    schema_id: str = ""

    def decision_margin(self, matrix: np.ndarray) -> np.ndarray:
        margin = np.full(matrix.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict(matrix)
        return margin

    def predict_proba(self, matrix: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_margin(matrix))

    def truncated(self, n_trees: int) -> "TreeEnsemble":
        return TreeEnsemble(
            base_score=self.base_score,
            trees=self.trees[:n_trees],
            learning_rate=self.learning_rate,
            schema_id=self.schema_id,
        )


def sigmoid(margin: np.ndarray | float) -> np.ndarray:
    """Numerically stable sigmoid, clipped to the open interval (0, 1).

    Margins up to +-1e3 must not overflow or collapse to exactly 0 or 1.
    """
    z = np.clip(np.asarray(margin, dtype=np.float64), -700.0, 700.0)
    out = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    return np.clip(out, _PROBA_FLOOR, 1.0 - _PROBA_FLOOR)


def logistic_loss(labels: np.ndarray, proba: np.ndarray) -> float:
    proba = np.clip(proba, _PROBA_FLOOR, 1.0 - _PROBA_FLOOR)
    return float(-np.mean(labels * np.log(proba) + (1 - labels) * np.log(1 - proba)))


def find_best_split(
    matrix: np.ndarray,
    residuals: np.ndarray,
    row_index: np.ndarray,
    min_samples_leaf: int,
) -> tuple[int, float, float] | None:
    """Exact greedy scan over sorted unique feature values.

    Returns (feature, threshold, gain) maximizing the variance reduction of
    the residuals, or None when no split satisfies min_samples_leaf. The
    first candidate in (feature asc, threshold asc) order wins ties.
    """
    n = len(row_index)
    best: tuple[int, float, float] | None = None
    best_gain = -np.inf
    node_residuals = residuals[row_index]
    total = node_residuals.sum()
    parent_term = total * total / n
    for feature in range(matrix.shape[1]):
        column = matrix[row_index, feature]
        if column.min() == column.max():
            continue
        order = np.argsort(column, kind="stable")
        sorted_values = column[order]
        prefix = np.cumsum(node_residuals[order])
        # candidate boundaries sit between consecutive distinct values
        boundary = np.nonzero(sorted_values[:-1] < sorted_values[1:])[0]
        left_sizes = boundary + 1
        valid = (left_sizes >= min_samples_leaf) & (n - left_sizes >= min_samples_leaf)
        boundary = boundary[valid]
        if boundary.size == 0:
            continue
        left_sizes = boundary + 1
        left_sums = prefix[boundary]
        right_sums = total - left_sums
        gains = (
            left_sums * left_sums / left_sizes
            + right_sums * right_sums / (n - left_sizes)
            - parent_term
        )
        local = int(np.argmax(gains))  # boundaries are threshold-ascending; argmax keeps the first
        if gains[local] > best_gain:
            best_gain = float(gains[local])
            threshold = float(sorted_values[boundary[local] + 1])
            best = (feature, threshold, best_gain)
    return best


def _build_tree(
    matrix: np.ndarray,
    residuals: np.ndarray,
    hessians: np.ndarray,
    config: TrainConfig,
) -> DecisionTree:
    nodes: list[dict] = []

    def leaf_value(row_index: np.ndarray) -> float:
        return float(residuals[row_index].sum() / (hessians[row_index].sum() + config.l2_leaf_reg))

    def grow(row_index: np.ndarray, depth: int) -> int:
        index = len(nodes)
        nodes.append({})
        split = None
        if depth < config.max_depth and len(row_index) >= 2 * config.min_samples_leaf:
            split = find_best_split(matrix, residuals, row_index, config.min_samples_leaf)
        if split is None:
            nodes[index] = {"value": leaf_value(row_index)}
            return index
        feature, threshold, _ = split
        goes_left = matrix[row_index, feature] < threshold
        left = grow(row_index[goes_left], depth + 1)
        right = grow(row_index[~goes_left], depth + 1)
        nodes[index] = {"feature": feature, "threshold": threshold, "left": left, "right": right}
        return index

    grow(np.arange(matrix.shape[0]), 0)
    return DecisionTree(nodes)


def train_gbdt(
    matrix: np.ndarray,
    labels: Sequence[int] | np.ndarray,
    config: TrainConfig,
    schema_id: str = "",
) -> TreeEnsemble:
    """Train the boosted ensemble. Requires at least one example of each class.

    The training logistic loss is checked to be non-increasing after every
    round; a violation raises TrainingError.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != y.shape[0]:
        raise TrainingError("matrix rows and labels must align")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise TrainingError("training data must contain both classes")

    positive_rate = float(y.mean())
    base_score = float(np.log(positive_rate / (1.0 - positive_rate)))
    margin = np.full(len(y), base_score, dtype=np.float64)
    previous_loss = logistic_loss(y, sigmoid(margin))

    trees: list[DecisionTree] = []
    for _ in range(config.n_trees):
        proba = sigmoid(margin)
        residuals = y - proba
        hessians = proba * (1.0 - proba)
        tree = _build_tree(matrix, residuals, hessians, config)
        trees.append(tree)
        margin += config.learning_rate * tree.predict(matrix)
        loss = logistic_loss(y, sigmoid(margin))
        if loss > previous_loss + _LOSS_TOLERANCE:
            raise TrainingError(
                f"training loss increased at round {len(trees)}: "
                f"{previous_loss:.12f} -> {loss:.12f}"
            )
        previous_loss = loss

    return TreeEnsemble(
        base_score=base_score,
        trees=tuple(trees),
        learning_rate=config.learning_rate,
        schema_id=schema_id,
    )


def train_on_vectors(
    examples: list[tuple[FeatureVector, int]],
    schema: FeatureSchema,
    config: TrainConfig,
) -> TreeEnsemble:
    """Spec-shaped entry point over sparse feature vectors sharing one schema."""
    vectors = [vector for vector, _ in examples]
    labels = [label for _, label in examples]
    matrix = vectors_to_matrix(vectors, schema)
    return train_gbdt(matrix, labels, config, schema_id=schema.schema_id)


def predict_proba(model: TreeEnsemble, vector: FeatureVector, schema: FeatureSchema) -> float:
    """Probability of the positive (premise) class for one sparse vector."""
    if model.schema_id and vector.schema_id != model.schema_id:
        raise TrainingError(
            f"vector schema {vector.schema_id} does not match model schema {model.schema_id}"
        )
    dense = vector.to_dense(schema.dimension)
    return float(model.predict_proba(dense.reshape(1, -1))[0])


def _tree_to_dict(tree: DecisionTree) -> dict:
    return {"nodes": tree.nodes}


def _tree_from_dict(payload: dict) -> DecisionTree:
    try:
        return DecisionTree(payload["nodes"])
    except (KeyError, TypeError) as err:
        raise ModelFormatError(f"bad tree payload: {err}") from err


def serialize(model: TreeEnsemble) -> bytes:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "schema_id": model.schema_id,
        "trees": [_tree_to_dict(tree) for tree in model.trees],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")


def deserialize(blob: bytes) -> TreeEnsemble:
    try:
        payload = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ModelFormatError(f"unreadable model payload: {err}") from err
    if not isinstance(payload, dict):
        raise ModelFormatError("model payload is not an object")
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version!r}")
    try:
        return TreeEnsemble(
            base_score=float(payload["base_score"]),
            trees=tuple(_tree_from_dict(t) for t in payload["trees"]),
            learning_rate=float(payload["learning_rate"]),
            schema_id=str(payload.get("schema_id", "")),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"bad model payload: {err}") from err
