"""Plain-array decision trees.

Fitted scikit-learn forests and boosted ensembles are flattened into lists of
node arrays so a trained classifier can be stored as JSON and evaluated with
numpy alone. Evaluation reproduces scikit-learn's traversal, including the
float32 cast of inputs before threshold comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class FlatTree:
    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray  # per-node output: P(class 1) for forests, raw leaf value for boosting

    @classmethod
    def from_sklearn(cls, tree, kind: str) -> "FlatTree":
        t = tree.tree_
        if kind == "proba":
            counts = t.value[:, 0, :]
            value = counts[:, 1] / counts.sum(axis=1)
        else:
            value = t.value[:, 0, 0]
        return cls(
            np.asarray(t.children_left, dtype=np.int64),
            np.asarray(t.children_right, dtype=np.int64),
            np.asarray(t.feature, dtype=np.int64),
            np.asarray(t.threshold, dtype=np.float64),
            np.asarray(value, dtype=np.float64),
        )

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X32 = np.asarray(X, dtype=np.float32)
        rows = np.arange(X32.shape[0])
        node = np.zeros(X32.shape[0], dtype=np.int64)
        active = self.left[node] != LEAF
        while active.any():
            idx = node[active]
            go_left = X32[rows[active], self.feature[idx]] <= self.threshold[idx]
            node[active] = np.where(go_left, self.left[idx], self.right[idx])
            active = self.left[node] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FlatTree":
        return cls(
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["value"], dtype=np.float64),
        )


@dataclass(frozen=True)
class FlatForest:
    """Averaged class-1 probability over trees."""

    trees: tuple[FlatTree, ...]

    @classmethod
    def from_sklearn(cls, forest) -> "FlatForest":
        if list(forest.classes_) != [0, 1]:
            raise ValueError("forest must be trained on labels {0, 1}")
        return cls(tuple(FlatTree.from_sklearn(est, "proba") for est in forest.estimators_))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {"type": "random_forest", "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "FlatForest":
        return cls(tuple(FlatTree.from_dict(t) for t in d["trees"]))


@dataclass(frozen=True)
class FlatBoosted:
    """Binary log-loss gradient boosting: sigmoid(init + rate * sum of leaf values)."""

    init: float
    learning_rate: float
    trees: tuple[FlatTree, ...]

    @classmethod
    def from_sklearn(cls, model, y: np.ndarray) -> "FlatBoosted":
        if list(model.classes_) != [0, 1]:
            raise ValueError("boosted model must be trained on labels {0, 1}")
        # default init estimator is the class prior, i.e. log-odds of the positive rate
        p = float(np.mean(y))
        init = float(np.log(p / (1.0 - p)))
        trees = tuple(FlatTree.from_sklearn(est, "raw") for est in model.estimators_[:, 0])
        return cls(init, float(model.learning_rate), trees)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(np.asarray(X).shape[0], self.init)
        for t in self.trees:
            raw += self.learning_rate * t.predict(X)
        return raw

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))

    def to_dict(self) -> dict:
        return {
            "type": "gradient_boosting",
            "init": self.init,
            "learning_rate": self.learning_rate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FlatBoosted":
        return cls(float(d["init"]), float(d["learning_rate"]), tuple(FlatTree.from_dict(t) for t in d["trees"]))
