"""Stratified cross-validation, rank-based AUC, and the approach x classifier
results grid.

Every randomized choice flows from explicit integer seeds, and per-cell model
seeds are derived by hashing (seed, approach, classifier, fold), so the grid
is reproducible bit-for-bit under any execution schedule, including process
pools.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DataError
from .features import FeatureKey, FeatureMatrix, IntegrationApproach, project
from .models import ClassifierSpec, predict_proba, train


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from any mix of strings and integers."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUC with midranks for ties.

    Equals the probability that a uniformly drawn positive outscores a
    uniformly drawn negative, ties counting one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos + n_neg != y.shape[0]:
        raise DataError("labels must be 0/1")
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC undefined: only one class present")
    ranks = rankdata(s)
    rank_sum_pos = float(np.sum(ranks[y == 1]))
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index per row; per-class counts across folds differ by at most 1."""

    fold_of: np.ndarray
    n_folds: int
    seed: int

    def __post_init__(self) -> None:
        fold_of = np.asarray(self.fold_of, dtype=np.int64).copy()
        fold_of.setflags(write=False)
        object.__setattr__(self, "fold_of", fold_of)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(
    labels: Sequence[int], n_folds: int = 10, seed: int = 0
) -> FoldAssignment:
    """Shuffle within each class by seed, then deal round-robin."""
    y = np.asarray(labels)
    if n_folds < 2:
        raise ConfigError(f"n_folds must be >= 2, got {n_folds}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if idx.shape[0] < n_folds:
            raise DataError(
                f"class {cls} has {idx.shape[0]} members, fewer than "
                f"{n_folds} folds"
            )
        perm = rng.permutation(idx)
        fold_of[perm] = np.arange(perm.shape[0]) % n_folds
    return FoldAssignment(fold_of=fold_of, n_folds=n_folds, seed=seed)


def stratified_holdout(
    labels: Sequence[int], fraction: float, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Single stratified split into (train indices, validation indices).

    Each class contributes round(fraction * class size) rows to validation,
    clamped so both sides keep at least one row of each class.
    """
    y = np.asarray(labels)
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train_parts = []
    val_parts = []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if idx.shape[0] < 2:
            raise DataError(
                f"class {cls} has {idx.shape[0]} members; need at least 2 "
                "to hold out a validation split"
            )
        n_val = int(round(fraction * idx.shape[0]))
        n_val = min(max(n_val, 1), idx.shape[0] - 1)
        perm = rng.permutation(idx)
        val_parts.append(perm[:n_val])
        train_parts.append(perm[n_val:])
    train_idx = np.sort(np.concatenate(train_parts))
    val_idx = np.sort(np.concatenate(val_parts))
    return train_idx, val_idx


def cross_validate(
    matrix: FeatureMatrix,
    spec: ClassifierSpec,
    folds: FoldAssignment,
    fold_seeds: Sequence[int] | None = None,
) -> np.ndarray:
    """Per-fold held-out AUCs; fold f trains on every other fold.

    fold_seeds, when given, reseeds the spec per fold; otherwise the spec is
    used as-is for every fold. Folds are independent, so results do not
    depend on evaluation order.
    """
    if fold_seeds is not None and len(fold_seeds) != folds.n_folds:
        raise ConfigError("fold_seeds must have one entry per fold")
    aucs = np.empty(folds.n_folds, dtype=np.float64)
    for f in range(folds.n_folds):
        fold_spec = spec if fold_seeds is None else spec.with_seed(fold_seeds[f])
        model = train(fold_spec, matrix.take_rows(folds.train_indices(f)))
        held_out = matrix.take_rows(folds.test_indices(f))
        aucs[f] = auc(predict_proba(model, held_out), held_out.labels)
    return aucs


@dataclass(frozen=True)
class GridCell:
    approach: IntegrationApproach
    classifier: str
    fold_aucs: np.ndarray
    n_features: int

    def __post_init__(self) -> None:
        fold_aucs = np.asarray(self.fold_aucs, dtype=np.float64).copy()
        fold_aucs.setflags(write=False)
        object.__setattr__(self, "fold_aucs", fold_aucs)

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.fold_aucs))

    @property
    def std_auc(self) -> float:
        """Sample standard deviation across folds (ddof=1)."""
        return float(np.std(self.fold_aucs, ddof=1))


@dataclass(frozen=True)
class EvaluationReport:
    """Full grid for one dataset, plus what the elimination stage selected."""

    ade: str
    cells: tuple[GridCell, ...]
    n_folds: int
    seed: int
    window_length: int
    kbest_features: tuple[FeatureKey, ...] | None = None

    def cell(self, approach: IntegrationApproach, classifier: str) -> GridCell:
        for c in self.cells:
            if c.approach is approach and c.classifier == classifier:
                return c
        raise KeyError(f"no cell for ({approach.value}, {classifier})")

    def to_fold_csv(self) -> str:
        lines = ["ade,approach,classifier,fold,auc"]
        for c in self.cells:
            for f, value in enumerate(c.fold_aucs):
                lines.append(
                    f"{self.ade},{c.approach.value},{c.classifier},{f},"
                    f"{repr(float(value))}"
                )
        return "\n".join(lines) + "\n"

    def to_summary_csv(self) -> str:
        lines = ["ade,approach,classifier,n_features,mean_auc,std_auc"]
        for c in self.cells:
            lines.append(
                f"{self.ade},{c.approach.value},{c.classifier},{c.n_features},"
                f"{repr(c.mean_auc)},{repr(c.std_auc)}"
            )
        return "\n".join(lines) + "\n"


def _cell_task(payload):
    """Worker for one grid cell; top-level so process pools can pickle it."""
    approach_value, classifier, data, spec, folds, fold_seeds = payload
    aucs = cross_validate(data, spec, folds, fold_seeds)
    return approach_value, classifier, aucs


def results_grid(
    matrix: FeatureMatrix,
    approaches: Sequence[IntegrationApproach],
    specs: Mapping[str, ClassifierSpec],
    n_folds: int = 10,
    seed: int = 0,
    ade: str = "synthetic",
    rfe_config=None,
    threads: int = 1,
):
    """Evaluate every approach x classifier cell on one shared fold split.

    The LMD-kbest column runs feature elimination once, on the training
    portion of fold 0 only (its own validation split comes out of that
    portion), and reuses the selected columns for every fold and classifier.
    That mirrors a single selected feature set per dataset; the held-out rows
    of folds 1.. have still influenced feature choice, which slightly favors
    the kbest column, so the selection is recorded in the report.

    Returns (EvaluationReport, RfeTrace or None).
    """
    from .elimination import run_rfe  # deferred: elimination uses auc above

    if not approaches:
        raise ConfigError("no integration approaches given")
    if not specs:
        raise ConfigError("no classifier specs given")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")

    folds = stratified_kfold(matrix.labels, n_folds, derive_seed(seed, "folds"))

    kbest_matrix = None
    kbest_keys = None
    trace = None
    if any(a.kbest for a in approaches):
        if rfe_config is None:
            raise ConfigError(
                "approach LMD-kbest requires an elimination config"
            )
        reference = next(
            (s for s in specs.values() if s.is_tree_based), None
        )
        if reference is None:
            raise ConfigError(
                "approach LMD-kbest requires at least one tree-based classifier"
            )
        fit_rows = matrix.take_rows(folds.train_indices(0))
        selected, trace = run_rfe(fit_rows, reference, rfe_config)
        keep = set(selected)
        kbest_keys = tuple(k for k in matrix.feature_keys if k in keep)
        kbest_matrix = matrix.take_columns(
            [j for j, k in enumerate(matrix.feature_keys) if k in keep]
        )

    tasks = []
    for approach in approaches:
        data = kbest_matrix if approach.kbest else project(matrix, approach)
        for name, spec in specs.items():
            fold_seeds = [
                derive_seed(seed, approach.value, name, f) for f in range(n_folds)
            ]
            tasks.append((approach.value, name, data, spec, folds, fold_seeds))

    if threads == 1 or len(tasks) == 1:
        outcomes = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_cell_task, tasks))

    by_key = {(a, c): aucs for a, c, aucs in outcomes}
    cells = []
    for approach in approaches:
        width = (
            kbest_matrix.n_features
            if approach.kbest
            else project(matrix, approach).n_features
        )
        for name in specs:
            cells.append(
                GridCell(
                    approach=approach,
                    classifier=name,
                    fold_aucs=by_key[(approach.value, name)],
                    n_features=width,
                )
            )

    report = EvaluationReport(
        ade=ade,
        cells=tuple(cells),
        n_folds=n_folds,
        seed=seed,
        window_length=matrix.window_length,
        kbest_features=kbest_keys,
    )
    return report, trace
