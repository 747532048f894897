"""Uniform train/score layer over the native classifiers.

A ClassifierSpec is a value object describing one model configuration; train
binds it to a feature matrix and returns an immutable TrainedModel that
carries its training column schema. Scoring enforces the schema exactly, so a
model can never silently consume columns in a different order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError
from .estimators import GradientBoosting, LogisticModel, RandomForest
from .features import FeatureKey, FeatureMatrix


class ClassifierKind(Enum):
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTING = "gradient_boosting"
    LINEAR = "linear"


@dataclass(frozen=True)
class ClassifierSpec:
    """One classifier configuration; defaults follow the evaluation setup
    (100-tree ensembles, sqrt feature sampling, unweighted classes)."""

    kind: ClassifierKind
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: str | int = "sqrt"
    learning_rate: float = 0.1
    l2_penalty: float = 1.0
    class_weight: str = "none"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2_penalty < 0:
            raise ConfigError(f"l2_penalty must be >= 0, got {self.l2_penalty}")
        if self.min_samples_leaf < 1:
            raise ConfigError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}"
            )
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.class_weight not in ("none", "balanced"):
            raise ConfigError(
                f"class_weight must be 'none' or 'balanced', got {self.class_weight!r}"
            )

    @property
    def is_tree_based(self) -> bool:
        return self.kind is not ClassifierKind.LINEAR

    @property
    def label(self) -> str:
        return self.kind.value

    def with_seed(self, seed: int) -> "ClassifierSpec":
        return ClassifierSpec(
            kind=self.kind,
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            features_per_split=self.features_per_split,
            learning_rate=self.learning_rate,
            l2_penalty=self.l2_penalty,
            class_weight=self.class_weight,
            seed=seed,
        )

    def build(self):
        cw = None if self.class_weight == "none" else self.class_weight
        if self.kind is ClassifierKind.RANDOM_FOREST:
            return RandomForest(
                n_trees=self.n_trees,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                features_per_split=self.features_per_split,
                class_weight=cw,
                seed=self.seed,
            )
        if self.kind is ClassifierKind.GRADIENT_BOOSTING:
            return GradientBoosting(
                n_trees=self.n_trees,
                learning_rate=self.learning_rate,
                max_depth=3 if self.max_depth is None else self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                class_weight=cw,
                seed=self.seed,
            )
        return LogisticModel(
            l2_penalty=self.l2_penalty, class_weight=cw, seed=self.seed
        )


@dataclass(frozen=True)
class ImportanceVector:
    """Per-feature non-negative importances aligned to feature_keys; sums to 1
    unless the model never split."""

    feature_keys: tuple[FeatureKey, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.feature_keys),):
            raise DataError("importances are not aligned with feature keys")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def ranked(self) -> list[tuple[FeatureKey, float]]:
        order = np.argsort(-self.values, kind="stable")
        return [(self.feature_keys[i], float(self.values[i])) for i in order]


@dataclass(frozen=True)
class TrainedModel:
    spec: ClassifierSpec
    estimator: object
    feature_keys: tuple[FeatureKey, ...]

    def export_json(self) -> str:
        """Inspection dump of the fitted parameters; not a stability contract."""
        est = self.estimator
        doc: dict = {
            "kind": self.spec.kind.value,
            "feature_names": [k.name for k in self.feature_keys],
        }
        if isinstance(est, LogisticModel):
            doc["coef"] = est.coef_.tolist()
            doc["intercept"] = est.intercept_
        else:
            if isinstance(est, GradientBoosting):
                doc["base_score"] = est.base_score_
                doc["learning_rate"] = est.learning_rate
            doc["trees"] = [
                {
                    "feature": t[0].tolist(),
                    "threshold": t[1].tolist(),
                    "left": t[2].tolist(),
                    "right": t[3].tolist(),
                    "value": t[4].tolist(),
                }
                for t in est.trees_
            ]
        return json.dumps(doc, indent=2)


def _check_schema(
    expected: tuple[FeatureKey, ...], got: tuple[FeatureKey, ...]
) -> None:
    if expected == got:
        return
    for i, key in enumerate(expected):
        if i >= len(got):
            raise DataError(f"schema mismatch: missing column {key.name!r}")
        if got[i] != key:
            raise DataError(
                f"schema mismatch at column {i}: expected {key.name!r}, "
                f"got {got[i].name!r}"
            )
    raise DataError(
        f"schema mismatch: unexpected extra column {got[len(expected)].name!r}"
    )


def train(spec: ClassifierSpec, matrix: FeatureMatrix) -> TrainedModel:
    """Fit spec on the matrix; deterministic given (spec, matrix)."""
    estimator = spec.build()
    estimator.fit(matrix.rows, matrix.labels)
    return TrainedModel(spec=spec, estimator=estimator, feature_keys=matrix.feature_keys)


def predict_proba(model: TrainedModel, rows: FeatureMatrix) -> np.ndarray:
    """Positive-class probability per row; the column schema must match the
    training schema exactly."""
    _check_schema(model.feature_keys, rows.feature_keys)
    return model.estimator.predict_proba(rows.rows)[:, 1]


def gini_importances(model: TrainedModel) -> ImportanceVector:
    """Impurity-decrease importances of a tree-based model.

    Weighted by node sample fraction, averaged over trees, normalized to
    sum 1; all-zero only when no tree ever split. A constant column can never
    host a split, so its importance is exactly 0.
    """
    if not model.spec.is_tree_based:
        raise ConfigError("importances undefined for this kind: linear")
    return ImportanceVector(
        feature_keys=model.feature_keys,
        values=model.estimator.feature_importances_,
    )
