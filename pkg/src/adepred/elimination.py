"""Recursive feature elimination driven by tree importances.

The loop holds one stratified validation split fixed, then repeatedly refits,
ranks features by importance, removes a batch, and rescores. It stops when the
surviving set reaches k, when a removal would cost more validation AUC than
the tolerance beta allows (that removal is not committed), or when the
candidate rule runs dry.

Two removal rules exist. eliminate_least_important is standard backward
elimination. eliminate_most_important is the inverted variant gated by the
significance level alpha: only features whose importance exceeds alpha are
candidates, and the highest-importance candidate goes first; with a tight
beta it prunes dominant features until the validation AUC starts to pay for
it. Both are kept because they bracket the sensible readings of an
alpha-gated elimination procedure; the default is the standard one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ConfigError, DataError
from .evaluation import auc, stratified_holdout
from .features import FeatureKey, FeatureMatrix
from .models import ClassifierSpec, gini_importances, predict_proba, train


class RfeRule(Enum):
    ELIMINATE_LEAST_IMPORTANT = "eliminate_least_important"
    ELIMINATE_MOST_IMPORTANT = "eliminate_most_important"


class StopReason(Enum):
    REACHED_K = "reached_k"
    AUC_DROP = "auc_drop"
    NO_CANDIDATES = "no_candidates"


@dataclass(frozen=True)
class RfeConfig:
    """Elimination controls: keep k features, tolerate an AUC drop of at most
    beta, gate candidates at importance alpha (most-important rule only)."""

    k: int
    alpha: float = 0.0
    beta: float = math.inf
    rule: RfeRule = RfeRule.ELIMINATE_LEAST_IMPORTANT
    step: int = 1
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.step < 1:
            raise ConfigError(f"step must be >= 1, got {self.step}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beta < 0 or math.isnan(self.beta):
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(
                f"validation_fraction must be in (0, 1), "
                f"got {self.validation_fraction}"
            )


@dataclass(frozen=True)
class RfeStep:
    """State after iteration i: what was removed to get here and how the
    refit model scored on the fixed validation split."""

    iteration: int
    removed: tuple[FeatureKey, ...]
    remaining: int
    val_auc: float


@dataclass(frozen=True)
class RfeTrace:
    steps: tuple[RfeStep, ...]
    stop_reason: StopReason
    rejected_auc: float | None = None

    def to_csv(self) -> str:
        """`iteration,removed,remaining,val_auc`; multiple removals in one
        iteration are ;-joined inside the field."""
        lines = ["iteration,removed,remaining,val_auc"]
        for s in self.steps:
            removed = ";".join(k.name for k in s.removed)
            lines.append(
                f"{s.iteration},{removed},{s.remaining},{repr(s.val_auc)}"
            )
        return "\n".join(lines) + "\n"


def _removal_batch(
    values: np.ndarray, config: RfeConfig, n_active: int
) -> np.ndarray | None:
    """Positions (into the active set) to remove this iteration, or None when
    the rule yields no candidates."""
    budget = min(config.step, n_active - config.k)
    if config.rule is RfeRule.ELIMINATE_LEAST_IMPORTANT:
        order = np.argsort(values, kind="stable")
        return order[:budget]
    candidates = np.flatnonzero(values > config.alpha)
    if candidates.shape[0] == 0:
        return None
    by_importance = candidates[
        np.argsort(-values[candidates], kind="stable")
    ]
    return by_importance[:budget]


def run_rfe(
    matrix: FeatureMatrix, spec: ClassifierSpec, config: RfeConfig
) -> tuple[tuple[FeatureKey, ...], RfeTrace]:
    """Eliminate features from the matrix until a stop rule fires.

    Returns the surviving keys (in the matrix's column order) and the full
    trace; trace iteration 0 describes the initial model before any removal.
    Requires a tree-based spec because the ranking is importance-driven, and
    strictly more columns than k so at least one elimination is possible.
    """
    if not spec.is_tree_based:
        raise ConfigError(
            "feature elimination needs a tree-based classifier for importances"
        )
    if matrix.n_features <= config.k:
        raise ConfigError(
            f"k={config.k} must be smaller than the column count "
            f"{matrix.n_features}"
        )

    train_idx, val_idx = stratified_holdout(
        matrix.labels, config.validation_fraction, config.seed
    )
    fit_rows = matrix.take_rows(train_idx)
    val_rows = matrix.take_rows(val_idx)

    active = list(range(matrix.n_features))
    model = train(spec, fit_rows)
    best_auc = auc(predict_proba(model, val_rows), val_rows.labels)
    steps = [RfeStep(0, (), len(active), best_auc)]

    stop = None
    rejected = None
    iteration = 0
    while True:
        if len(active) == config.k:
            stop = StopReason.REACHED_K
            break
        values = gini_importances(model).values
        batch = _removal_batch(values, config, len(active))
        if batch is None:
            stop = StopReason.NO_CANDIDATES
            break
        drop = {active[i] for i in batch}
        candidate_active = [j for j in active if j not in drop]

        candidate_model = train(spec, fit_rows.take_columns(candidate_active))
        candidate_auc = auc(
            predict_proba(candidate_model, val_rows.take_columns(candidate_active)),
            val_rows.labels,
        )
        if best_auc - candidate_auc > config.beta:
            stop = StopReason.AUC_DROP
            rejected = candidate_auc
            break

        iteration += 1
        active = candidate_active
        model = candidate_model
        steps.append(
            RfeStep(
                iteration,
                tuple(matrix.feature_keys[j] for j in sorted(drop)),
                len(active),
                candidate_auc,
            )
        )
        best_auc = max(best_auc, candidate_auc)

    selected = tuple(matrix.feature_keys[j] for j in active)
    return selected, RfeTrace(tuple(steps), stop, rejected)


class RecursiveEliminator(BaseEstimator):
    """Estimator-style wrapper around run_rfe: fit learns a column mask,
    transform applies it to matching matrices."""

    def __init__(self, spec: ClassifierSpec, config: RfeConfig):
        self.spec = spec
        self.config = config

    def fit(self, matrix: FeatureMatrix) -> "RecursiveEliminator":
        selected, trace = run_rfe(matrix, self.spec, self.config)
        keep = set(selected)
        self.support_ = np.array(
            [k in keep for k in matrix.feature_keys], dtype=bool
        )
        self.selected_keys_ = selected
        self.trace_ = trace
        self.feature_keys_ = matrix.feature_keys
        return self

    def transform(self, matrix: FeatureMatrix) -> FeatureMatrix:
        if not hasattr(self, "support_"):
            raise ConfigError("transform called before fit")
        if matrix.feature_keys != self.feature_keys_:
            raise DataError(
                "matrix columns do not match the columns this eliminator "
                "was fitted on"
            )
        return matrix.take_columns(np.flatnonzero(self.support_))

    def fit_transform(self, matrix: FeatureMatrix) -> FeatureMatrix:
        return self.fit(matrix).transform(matrix)
