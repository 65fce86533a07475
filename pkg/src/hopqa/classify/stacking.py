"""Stacking ensemble that routes questions to the direct or sequential path.

Two tree ensembles (a random forest and gradient-boosted trees) each produce
P(sequential). A logistic meta-classifier combines only those two
probabilities::

    p = sigmoid(w_forest * P_forest + w_boosted * P_boosted + b)

The meta-classifier is fit on out-of-fold base predictions so it never sees a
base learner's output on rows that learner was trained on.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from hopqa.classify.features import FeatureConfig, FeatureVector, HashedTfidfEncoder, extract_features, feature_matrix
from hopqa.classify.trees import FlatBoosted, FlatForest
from hopqa.errors import DimensionMismatch, InsufficientData
from hopqa.model import QuestionKind

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
# reference (forest, boosted) meta weights kept as a documented fixture, never a training target
REFERENCE_META_WEIGHTS = (0.72, 0.28)


@dataclass(frozen=True)
class TrainingExample:
    question_text: str
    label: QuestionKind


@dataclass(frozen=True)
class TrainingConfig:
    n_estimators: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    n_folds: int = 5
    seed: int = 0
    embedding_dim: int = 256
    include_raw_features: bool = False
    threshold: float = 0.5


@dataclass(frozen=True)
class FoldRecord:
    """Row bookkeeping for one out-of-fold split."""

    fold: int
    train_rows: tuple[int, ...]
    predicted_rows: tuple[int, ...]


@dataclass(frozen=True)
class ClassifierModel:
    feature_config: FeatureConfig
    base_forest: FlatForest
    base_boosted: FlatBoosted
    meta_weights: tuple[float, ...]
    meta_bias: float
    threshold: float = 0.5
    include_raw_features: bool = False

    def __post_init__(self):
        object.__setattr__(self, "meta_weights", tuple(float(w) for w in self.meta_weights))
        expected = 2 + (self.feature_config.n_features if self.include_raw_features else 0)
        if len(self.meta_weights) != expected:
            raise ValueError(f"expected {expected} meta weights, got {len(self.meta_weights)}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    def base_probabilities(self, X: np.ndarray) -> np.ndarray:
        """H(X): one column per base learner, each P(sequential)."""
        return np.column_stack([self.base_forest.predict_proba(X), self.base_boosted.predict_proba(X)])

    def meta_inputs(self, X: np.ndarray) -> np.ndarray:
        H = self.base_probabilities(X)
        return np.hstack([H, X]) if self.include_raw_features else H

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.feature_config.n_features:
            raise DimensionMismatch(f"expected {self.feature_config.n_features} features, got {X.shape[1]}")
        z = self.meta_inputs(X) @ np.asarray(self.meta_weights) + self.meta_bias
        return _sigmoid(z)

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        enc = self.feature_config.encoder
        return {
            "format_version": FORMAT_VERSION,
            "feature_config": {"embedding": "hashed_tfidf", "dim": enc.dim, "idf": list(enc.idf) if enc.idf else None},
            "include_raw_features": self.include_raw_features,
            "base_forest": self.base_forest.to_dict(),
            "base_boosted": self.base_boosted.to_dict(),
            "meta_weights": list(self.meta_weights),
            "meta_bias": self.meta_bias,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported classifier format version {d.get('format_version')!r}")
        fc = d["feature_config"]
        idf = tuple(fc["idf"]) if fc.get("idf") is not None else None
        return cls(
            feature_config=FeatureConfig(HashedTfidfEncoder(int(fc["dim"]), idf)),
            base_forest=FlatForest.from_dict(d["base_forest"]),
            base_boosted=FlatBoosted.from_dict(d["base_boosted"]),
            meta_weights=tuple(d["meta_weights"]),
            meta_bias=float(d["meta_bias"]),
            threshold=float(d.get("threshold", 0.5)),
            include_raw_features=bool(d.get("include_raw_features", False)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def stack_probability(weights: Sequence[float], bias: float, base_probs: Sequence[float]) -> float:
    """sigmoid(W . H + b), clamped to the open interval (0, 1)."""
    z = math.fsum(w * h for w, h in zip(weights, base_probs, strict=True)) + bias
    p = float(_sigmoid(np.array([z]))[0])
    return min(max(p, math.ulp(0.0)), 1.0 - 2**-53)


def predict_proba(model: ClassifierModel, features: FeatureVector) -> float:
    if len(features.embedding) != model.feature_config.dim:
        raise DimensionMismatch(
            f"embedding has dimension {len(features.embedding)}, model expects {model.feature_config.dim}"
        )
    x = features.as_array()[None, :]
    inputs = model.meta_inputs(x)[0]
    return stack_probability(model.meta_weights, model.meta_bias, inputs)


def classify(model: ClassifierModel, question_text: str, threshold: Optional[float] = None) -> QuestionKind:
    """Sequential iff P(sequential) >= threshold; ties go to Sequential."""
    threshold = model.threshold if threshold is None else threshold
    p = predict_proba(model, extract_features(question_text, model.feature_config))
    return QuestionKind.SEQUENTIAL if p >= threshold else QuestionKind.DIRECT


# -- training ----------------------------------------------------------------


def _labels(examples: Sequence[TrainingExample]) -> np.ndarray:
    return np.array([1 if e.label is QuestionKind.SEQUENTIAL else 0 for e in examples])


def _fold_count(y: np.ndarray, requested: int) -> int:
    smallest = int(min(np.sum(y == 0), np.sum(y == 1)))
    if smallest >= requested:
        return requested
    if smallest >= 2:
        log.warning("smallest class has %d examples; falling back to 2-fold stacking", smallest)
        return 2
    raise InsufficientData(f"need at least 2 examples per class, smallest class has {smallest}")


def _base_learners(config: TrainingConfig):
    from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier

    forest = RandomForestClassifier(
        n_estimators=config.n_estimators, max_depth=config.max_depth, random_state=config.seed, n_jobs=1
    )
    boosted = GradientBoostingClassifier(
        n_estimators=config.n_estimators,
        max_depth=config.max_depth,
        learning_rate=config.learning_rate,
        random_state=config.seed,
    )
    return forest, boosted


def fit_base_learners(X: np.ndarray, y: np.ndarray, config: TrainingConfig) -> tuple[FlatForest, FlatBoosted]:
    forest, boosted = _base_learners(config)
    forest.fit(X, y)
    boosted.fit(X, y)
    return FlatForest.from_sklearn(forest), FlatBoosted.from_sklearn(boosted, y)


def out_of_fold_probabilities(
    X: np.ndarray, y: np.ndarray, config: TrainingConfig, fold_log: Optional[list] = None
) -> np.ndarray:
    from sklearn.model_selection import StratifiedKFold

    k = _fold_count(y, config.n_folds)
    H = np.full((len(y), 2), np.nan)
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=config.seed)
    for fold, (train_rows, held_rows) in enumerate(splitter.split(X, y)):
        forest, boosted = fit_base_learners(X[train_rows], y[train_rows], config)
        H[held_rows, 0] = forest.predict_proba(X[held_rows])
        H[held_rows, 1] = boosted.predict_proba(X[held_rows])
        if fold_log is not None:
            fold_log.append(FoldRecord(fold, tuple(int(i) for i in train_rows), tuple(int(i) for i in held_rows)))
    if np.isnan(H).any():
        raise RuntimeError("some rows received no out-of-fold prediction")
    return H


def train(
    examples: Sequence[TrainingExample],
    config: TrainingConfig | None = None,
    fold_log: Optional[list] = None,
) -> ClassifierModel:
    """Fit base learners and the meta-classifier.

    Pass a list as ``fold_log`` to receive one ``FoldRecord`` per split.
    """
    from sklearn.linear_model import LogisticRegression

    config = config or TrainingConfig()
    y = _labels(examples)
    _fold_count(y, config.n_folds)

    texts = [e.question_text for e in examples]
    feature_config = FeatureConfig(HashedTfidfEncoder(config.embedding_dim).fit(texts))
    X = feature_matrix(texts, feature_config)

    H = out_of_fold_probabilities(X, y, config, fold_log)
    meta_X = np.hstack([H, X]) if config.include_raw_features else H
    meta = LogisticRegression(random_state=config.seed, max_iter=1000)
    meta.fit(meta_X, y)

    forest, boosted = fit_base_learners(X, y, config)
    return ClassifierModel(
        feature_config=feature_config,
        base_forest=forest,
        base_boosted=boosted,
        meta_weights=tuple(float(w) for w in meta.coef_[0]),
        meta_bias=float(meta.intercept_[0]),
        threshold=config.threshold,
        include_raw_features=config.include_raw_features,
    )


def load_training_data(path: str | Path) -> list[TrainingExample]:
    """Read JSONL rows of ``{"text": ..., "label": "direct"|"sequential"}``."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            try:
                examples.append(TrainingExample(row["text"], QuestionKind(row["label"])))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad training row ({exc})") from None
    return examples
