"""Native binary classifiers with an sklearn-style estimator API.

Three families: bootstrap random forest (gini splits, soft voting),
first-order gradient boosting on logistic loss (squared-error stage trees),
and an L2-regularized logistic baseline fit by Newton iterations. Labels must
be exactly {0, 1}; predict_proba returns the usual (n, 2) column layout.

The tree estimators own the determinism contract: tree t uses seed
(seed + t) & 0xFFFFFFFF and trees are grown and accumulated in index order,
so a fit is reproducible bit-for-bit on any process.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _kernels
from .errors import ConfigError, DataError

_SEED_MASK = 0xFFFFFFFF


def _validate_training_data(X, y):
    if hasattr(X, "shape") and len(getattr(X, "shape", ())) == 2 and X.shape[1] == 0:
        raise DataError("training matrix has no feature columns")
    X, y = check_X_y(X, y, dtype=np.float64, order="C")
    y = np.asarray(y)
    values = set(np.unique(y).tolist())
    if not values <= {0, 1}:
        raise DataError(f"labels must be 0/1, found {sorted(values)}")
    if len(values) < 2:
        raise DataError("training labels contain a single class")
    return X, y.astype(np.float64)


def _sample_weights(y, class_weight, sample_weight, n):
    w = np.ones(n, dtype=np.float64)
    if sample_weight is not None:
        sw = np.asarray(sample_weight, dtype=np.float64)
        if sw.shape != (n,):
            raise DataError("sample_weight is not aligned with rows")
        if np.any(sw < 0):
            raise DataError("sample_weight must be non-negative")
        w *= sw
    if class_weight == "balanced":
        n_pos = float(np.sum(y == 1))
        n_neg = float(np.sum(y == 0))
        w *= np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))
    elif class_weight is not None:
        raise ConfigError(f"unknown class_weight {class_weight!r}")
    return w


def _resolve_m_try(features_per_split, p):
    if features_per_split == "sqrt":
        return min(p, math.isqrt(p - 1) + 1)  # ceil(sqrt(p)) for p >= 1
    if features_per_split == "all":
        return p
    if isinstance(features_per_split, int) and features_per_split >= 1:
        return min(p, features_per_split)
    raise ConfigError(
        f"features_per_split must be 'sqrt', 'all', or a positive integer, "
        f"got {features_per_split!r}"
    )


def _grow(X, y, w, criterion, max_depth, min_samples_leaf, m_try, bootstrap, seed):
    n = X.shape[0]
    cap = 2 * n + 1
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty(cap, dtype=np.float64)
    importance = np.zeros(X.shape[1], dtype=np.float64)
    depth = -1 if max_depth is None else int(max_depth)
    n_nodes = _kernels.grow_tree(
        X,
        y,
        w,
        criterion,
        depth,
        min_samples_leaf,
        m_try,
        bootstrap,
        seed,
        feature,
        threshold,
        left,
        right,
        value,
        importance,
    )
    tree = (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )
    return tree, importance


def _tree_values(tree, X):
    out = np.empty(X.shape[0], dtype=np.float64)
    predict_kernel = _kernels.predict_tree
    predict_kernel(X, tree[0], tree[1], tree[2], tree[3], tree[4], out)
    return out


def _check_scoring_rows(estimator, X):
    X = check_array(X, dtype=np.float64, order="C", ensure_min_samples=0)
    if X.shape[1] != estimator.n_features_in_:
        raise DataError(
            f"expected {estimator.n_features_in_} feature columns, "
            f"got {X.shape[1]}"
        )
    return X


class _BinaryClassifier(ClassifierMixin, BaseEstimator):
    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[(proba[:, 1] >= 0.5).astype(np.intp)]

    def _finish_fit(self, X):
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self


class RandomForest(_BinaryClassifier):
    """Bagged gini trees with per-node feature sampling and soft voting.

    The forest probability is the mean over trees of the leaf's positive-class
    fraction. Importances are impurity decreases weighted by node sample
    fraction, averaged over trees, normalized to sum 1.
    """

    def __init__(
        self,
        n_trees=100,
        max_depth=None,
        min_samples_leaf=1,
        features_per_split="sqrt",
        class_weight=None,
        seed=0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.class_weight = class_weight
        self.seed = seed

    def fit(self, X, y, sample_weight=None):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        X, y = _validate_training_data(X, y)
        w = _sample_weights(y, self.class_weight, sample_weight, X.shape[0])
        m_try = _resolve_m_try(self.features_per_split, X.shape[1])

        trees = []
        importance_total = np.zeros(X.shape[1], dtype=np.float64)
        for t in range(self.n_trees):
            tree, imp = _grow(
                X,
                y,
                w,
                _kernels.GINI,
                self.max_depth,
                self.min_samples_leaf,
                m_try,
                True,
                (self.seed + t) & _SEED_MASK,
            )
            trees.append(tree)
            importance_total += imp

        self.trees_ = trees
        mean_imp = importance_total / self.n_trees
        total = mean_imp.sum()
        self.feature_importances_ = (
            mean_imp / total if total > 0 else np.zeros_like(mean_imp)
        )
        return self._finish_fit(X)

    def predict_proba(self, X):
        check_is_fitted(self, "trees_")
        X = _check_scoring_rows(self, X)
        p1 = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees_:
            p1 += _tree_values(tree, X)
        p1 /= len(self.trees_)
        return np.column_stack([1.0 - p1, p1])


class GradientBoosting(_BinaryClassifier):
    """Additive shallow regression trees on the gradient of logistic loss.

    Stage t fits the residual y - sigmoid(F) with a squared-error tree over
    all features and full data (no row or column sampling), and each leaf
    contributes learning_rate times its weighted mean residual. The model is
    fully deterministic; seed is accepted for interface uniformity.
    """

    def __init__(
        self,
        n_trees=100,
        learning_rate=0.1,
        max_depth=3,
        min_samples_leaf=1,
        class_weight=None,
        seed=0,
    ):
        self.n_trees = n_trees
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.class_weight = class_weight
        self.seed = seed

    def fit(self, X, y, sample_weight=None):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.learning_rate <= 0:
            raise ConfigError(
                f"learning_rate must be > 0, got {self.learning_rate}"
            )
        X, y = _validate_training_data(X, y)
        w = _sample_weights(y, self.class_weight, sample_weight, X.shape[0])

        p_base = min(max(np.sum(w * y) / np.sum(w), 1e-12), 1.0 - 1e-12)
        self.base_score_ = math.log(p_base / (1.0 - p_base))

        scores = np.full(X.shape[0], self.base_score_, dtype=np.float64)
        trees = []
        importance_total = np.zeros(X.shape[1], dtype=np.float64)
        for t in range(self.n_trees):
            residual = y - expit(scores)
            tree, imp = _grow(
                X,
                residual,
                w,
                _kernels.MSE,
                self.max_depth,
                self.min_samples_leaf,
                X.shape[1],
                False,
                (self.seed + t) & _SEED_MASK,
            )
            trees.append(tree)
            importance_total += imp
            scores += self.learning_rate * _tree_values(tree, X)

        self.trees_ = trees
        mean_imp = importance_total / self.n_trees
        total = mean_imp.sum()
        self.feature_importances_ = (
            mean_imp / total if total > 0 else np.zeros_like(mean_imp)
        )
        return self._finish_fit(X)

    def decision_function(self, X):
        check_is_fitted(self, "trees_")
        X = _check_scoring_rows(self, X)
        scores = np.full(X.shape[0], self.base_score_, dtype=np.float64)
        for tree in self.trees_:
            scores += self.learning_rate * _tree_values(tree, X)
        return scores

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])


class LogisticModel(_BinaryClassifier):
    """L2-regularized logistic regression fit by Newton iterations.

    The intercept is unpenalized. Convergence is declared when the largest
    coefficient change falls below tol; iteration stops at max_iter either
    way (separable data with l2_penalty = 0 never converges in norm).
    """

    def __init__(
        self,
        l2_penalty=1.0,
        class_weight=None,
        tol=1e-8,
        max_iter=10_000,
        seed=0,
    ):
        self.l2_penalty = l2_penalty
        self.class_weight = class_weight
        self.tol = tol
        self.max_iter = max_iter
        self.seed = seed

    def fit(self, X, y, sample_weight=None):
        if self.l2_penalty < 0:
            raise ConfigError(f"l2_penalty must be >= 0, got {self.l2_penalty}")
        X, y = _validate_training_data(X, y)
        w = _sample_weights(y, self.class_weight, sample_weight, X.shape[0])

        n, p = X.shape
        Xb = np.hstack([X, np.ones((n, 1))])
        beta = np.zeros(p + 1, dtype=np.float64)
        ridge = np.full(p + 1, self.l2_penalty, dtype=np.float64)
        ridge[-1] = 0.0

        self.n_iter_ = 0
        for _ in range(self.max_iter):
            z = Xb @ beta
            prob = expit(z)
            grad = Xb.T @ (w * (prob - y)) + ridge * beta
            curve = w * prob * (1.0 - prob)
            hess = (Xb.T * curve) @ Xb
            hess[np.diag_indices_from(hess)] += ridge
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, grad, rcond=None)[0]
            beta -= step
            self.n_iter_ += 1
            if np.max(np.abs(step)) < self.tol:
                break

        self.coef_ = beta[:p].copy()
        self.intercept_ = float(beta[p])
        return self._finish_fit(X)

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = _check_scoring_rows(self, X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])
