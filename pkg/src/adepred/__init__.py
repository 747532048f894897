"""Adverse drug event prediction from heterogeneous EHR event streams.

Windowed event histories are first aggregated into fixed-length vectors
(occurrence counts for drug and diagnosis codes, a trend scalar per lab
code). Recursive feature elimination guided by tree importances then prunes
the integrated feature set. Finally, native ensemble and linear classifiers
are scored with rank-based AUC under stratified k-fold cross-validation, and
integration approaches are compared across datasets with the Friedman and
Nemenyi tests.
"""

from .comparison import (
    FriedmanResult,
    NemenyiResult,
    ScoreTable,
    average_ranks,
    friedman_test,
    nemenyi,
)
from .elimination import (
    RecursiveEliminator,
    RfeConfig,
    RfeRule,
    RfeTrace,
    run_rfe,
)
from .errors import AdepredError, ConfigError, DataError
from .evaluation import (
    EvaluationReport,
    FoldAssignment,
    auc,
    cross_validate,
    derive_seed,
    results_grid,
    stratified_kfold,
)
from .events import Cohort, CohortMember, Event, EventKind, PatientRecord, Window
from .features import (
    FeatureKey,
    FeatureMatrix,
    IntegrationApproach,
    Source,
    aggregate_record,
    build_matrix,
    count_categorical,
    project,
    trend_slope,
)
from .ingest import CohortConfig, ControlIndexPolicy, FileFormat, build_cohort, parse_events
from .models import (
    ClassifierKind,
    ClassifierSpec,
    ImportanceVector,
    TrainedModel,
    gini_importances,
    predict_proba,
    train,
)
from .synth import Effect, PlantedEffect, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AdepredError",
    "ClassifierKind",
    "ClassifierSpec",
    "Cohort",
    "CohortConfig",
    "CohortMember",
    "ConfigError",
    "ControlIndexPolicy",
    "DataError",
    "Effect",
    "EvaluationReport",
    "Event",
    "EventKind",
    "FeatureKey",
    "FeatureMatrix",
    "FileFormat",
    "FoldAssignment",
    "FriedmanResult",
    "ImportanceVector",
    "IntegrationApproach",
    "NemenyiResult",
    "PatientRecord",
    "PlantedEffect",
    "RecursiveEliminator",
    "RfeConfig",
    "RfeRule",
    "RfeTrace",
    "ScoreTable",
    "Source",
    "SynthConfig",
    "TrainedModel",
    "Window",
    "aggregate_record",
    "auc",
    "average_ranks",
    "build_cohort",
    "build_matrix",
    "count_categorical",
    "cross_validate",
    "derive_seed",
    "friedman_test",
    "generate",
    "gini_importances",
    "nemenyi",
    "parse_events",
    "predict_proba",
    "project",
    "results_grid",
    "run_rfe",
    "stratified_kfold",
    "train",
    "trend_slope",
]
