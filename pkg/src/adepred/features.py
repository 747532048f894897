"""Windowed feature aggregation: event streams to fixed-length vectors.

Categorical codes (drugs, diagnoses) become in-window occurrence counts; each
lab code's time series is reduced to one scalar by a trend transform (default:
ordinary-least-squares slope in value-per-day units). Vectors are assembled
into a dense matrix with a canonical column order, and integration approaches
select column subsets by source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .events import Cohort, Event, EventKind, PatientRecord, Window, slice_window


class Source(Enum):
    """Feature source: L = lab measurements, M = medications, D = diagnoses."""

    L = "L"
    M = "M"
    D = "D"


_SOURCE_RANK = {Source.L: 0, Source.M: 1, Source.D: 2}

_SOURCE_BY_KIND = {
    EventKind.LAB: Source.L,
    EventKind.DRUG: Source.M,
    EventKind.DIAGNOSIS: Source.D,
}


@dataclass(frozen=True, order=False)
class FeatureKey:
    source: Source
    code: str

    @property
    def name(self) -> str:
        return f"{self.source.value}:{self.code}"

    @classmethod
    def parse(cls, name: str) -> "FeatureKey":
        prefix, sep, code = name.partition(":")
        if not sep or not code:
            raise DataError(f"bad feature name {name!r}; expected '<source>:<code>'")
        try:
            source = Source(prefix)
        except ValueError:
            raise DataError(f"bad feature source {prefix!r} in {name!r}") from None
        return cls(source, code)

    def sort_key(self) -> tuple[int, str]:
        return (_SOURCE_RANK[self.source], self.code)


class IntegrationApproach(Enum):
    """The eight feature-set combinations evaluated against each other."""

    L = "L"
    M = "M"
    D = "D"
    LM = "LM"
    LD = "LD"
    MD = "MD"
    LMD = "LMD"
    LMD_KBEST = "LMD-kbest"

    @property
    def sources(self) -> frozenset[Source]:
        letters = "LMD" if self is IntegrationApproach.LMD_KBEST else self.value
        return frozenset(Source(c) for c in letters)

    @property
    def kbest(self) -> bool:
        return self is IntegrationApproach.LMD_KBEST


def canonical_order(keys: Iterable[FeatureKey]) -> tuple[FeatureKey, ...]:
    """Sources L, M, D in that order; codes lexicographic within a source."""
    return tuple(sorted(keys, key=FeatureKey.sort_key))


def count_categorical(
    events: Sequence[Event], source: Source
) -> dict[FeatureKey, float]:
    """Occurrence counts per code of one categorical source.

    Codes absent from the window are absent from the map; they materialize as
    zeros at matrix assembly.
    """
    if source is Source.L:
        raise ConfigError("count aggregation applies to categorical sources only")
    counts: dict[FeatureKey, float] = {}
    for event in events:
        if _SOURCE_BY_KIND[event.kind] is source:
            key = FeatureKey(source, event.code)
            counts[key] = counts.get(key, 0.0) + 1.0
    return counts


def trend_slope(points: Sequence[tuple[float, float]]) -> float:
    """OLS slope of value against time, in value units per day.

    One point, or all points at the same timestamp, has no defined slope and
    maps to 0. No points maps to NaN, the missing marker resolved at matrix
    assembly.
    """
    n = len(points)
    if n == 0:
        return math.nan
    if n == 1:
        return 0.0
    t_mean = math.fsum(t for t, _ in points) / n
    v_mean = math.fsum(v for _, v in points) / n
    den = math.fsum((t - t_mean) ** 2 for t, _ in points)
    if den == 0.0:
        return 0.0
    num = math.fsum((t - t_mean) * (v - v_mean) for t, v in points)
    return num / den


def trend_last_value(points: Sequence[tuple[float, float]]) -> float:
    if not points:
        return math.nan
    return max(points, key=lambda p: p[0])[1]


def trend_mean(points: Sequence[tuple[float, float]]) -> float:
    if not points:
        return math.nan
    return math.fsum(v for _, v in points) / len(points)


TREND_TRANSFORMS: dict[str, Callable[[Sequence[tuple[float, float]]], float]] = {
    "slope": trend_slope,
    "last_value": trend_last_value,
    "mean": trend_mean,
}


def _resolve_transform(name: str) -> Callable[[Sequence[tuple[float, float]]], float]:
    try:
        return TREND_TRANSFORMS[name]
    except KeyError:
        raise ConfigError(
            f"unknown lab transform {name!r}; expected one of "
            f"{sorted(TREND_TRANSFORMS)}"
        ) from None


def aggregate_record(
    record: PatientRecord,
    window: Window,
    target_code: str,
    lab_transform: str = "slope",
) -> dict[FeatureKey, float]:
    """One patient's windowed feature map: counts plus lab trends.

    Events carrying the target code are excluded regardless of kind, so the
    label can never leak into its own feature.
    """
    transform = _resolve_transform(lab_transform)
    in_window = [
        e for e in slice_window(record, window) if e.code != target_code
    ]
    features = count_categorical(in_window, Source.M)
    features.update(count_categorical(in_window, Source.D))

    lab_points: dict[str, list[tuple[float, float]]] = {}
    for e in in_window:
        if e.kind is EventKind.LAB:
            lab_points.setdefault(e.code, []).append(
                (float(e.timestamp), float(e.value))
            )
    for code, points in lab_points.items():
        features[FeatureKey(Source.L, code)] = transform(points)
    return features


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Dense per-patient feature matrix with row-aligned labels and ids.

    Arrays are read-only; derive new matrices with take_rows / take_columns.
    """

    feature_keys: tuple[FeatureKey, ...]
    rows: np.ndarray
    labels: np.ndarray
    patient_ids: tuple[str, ...]
    window_length: int

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if rows.ndim != 2:
            raise DataError(f"rows must be 2-dimensional, got shape {rows.shape}")
        if rows.shape != (len(self.patient_ids), len(self.feature_keys)):
            raise DataError(
                f"rows shape {rows.shape} does not match "
                f"{len(self.patient_ids)} patients x {len(self.feature_keys)} features"
            )
        if labels.shape != (rows.shape[0],):
            raise DataError("labels are not aligned with rows")
        if rows.size and not np.all(np.isfinite(rows)):
            raise DataError("feature matrix contains non-finite entries")
        bad = set(np.unique(labels)) - {0, 1}
        if bad:
            raise DataError(f"labels must be 0/1, found {sorted(bad)}")
        if len(set(self.feature_keys)) != len(self.feature_keys):
            raise DataError("duplicate feature keys")
        rows = rows.copy() if not rows.flags.owndata else rows
        labels = labels.copy() if not labels.flags.owndata else labels
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_keys", tuple(self.feature_keys))
        object.__setattr__(self, "patient_ids", tuple(self.patient_ids))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(k.name for k in self.feature_keys)

    def take_rows(self, indices: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        return FeatureMatrix(
            feature_keys=self.feature_keys,
            rows=self.rows[idx],
            labels=self.labels[idx],
            patient_ids=tuple(self.patient_ids[i] for i in idx),
            window_length=self.window_length,
        )

    def take_columns(self, indices: Sequence[int] | np.ndarray) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        return FeatureMatrix(
            feature_keys=tuple(self.feature_keys[i] for i in idx),
            rows=self.rows[:, idx],
            labels=self.labels,
            patient_ids=self.patient_ids,
            window_length=self.window_length,
        )

    def to_csv(self) -> str:
        """Interchange form: header `patient_id,label,<feature names>`, LF
        endings, floats written with shortest round-trip repr."""
        lines = ["patient_id,label," + ",".join(self.feature_names)]
        if self.n_features == 0:
            lines[0] = lines[0].rstrip(",")
        for i in range(self.n_rows):
            cells = [self.patient_ids[i], str(int(self.labels[i]))]
            cells.extend(repr(float(v)) for v in self.rows[i])
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, window_length: int = 0) -> "FeatureMatrix":
        lines = [ln for ln in text.split("\n") if ln]
        if not lines:
            raise DataError("empty feature matrix CSV")
        header = lines[0].split(",")
        if header[:2] != ["patient_id", "label"]:
            raise DataError(
                f"bad feature matrix header; expected it to start with "
                f"'patient_id,label', got {lines[0]!r}"
            )
        keys = tuple(FeatureKey.parse(name) for name in header[2:])
        ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for n, line in enumerate(lines[1:], start=2):
            cells = line.split(",")
            if len(cells) != len(header):
                raise DataError(
                    f"line {n}: expected {len(header)} fields, got {len(cells)}"
                )
            ids.append(cells[0])
            labels.append(int(cells[1]))
            rows.append([float(c) for c in cells[2:]])
        return cls(
            feature_keys=keys,
            rows=np.array(rows, dtype=np.float64).reshape(len(ids), len(keys)),
            labels=np.array(labels, dtype=np.int64),
            patient_ids=tuple(ids),
            window_length=window_length,
        )


def build_matrix(cohort: Cohort, lab_transform: str = "slope") -> FeatureMatrix:
    """Assemble the cohort's feature matrix in canonical column order.

    Keys unobserved for a patient fill with 0: an uncounted code occurred zero
    times, and an unmeasured lab gets the no-trend value.
    """
    maps = [
        aggregate_record(m.record, m.window, cohort.target_code, lab_transform)
        for m in cohort.members
    ]
    keys = canonical_order({k for fm in maps for k in fm})
    col = {k: j for j, k in enumerate(keys)}
    rows = np.zeros((len(maps), len(keys)), dtype=np.float64)
    for i, fm in enumerate(maps):
        for k, v in fm.items():
            if not math.isnan(v):
                rows[i, col[k]] = v
    return FeatureMatrix(
        feature_keys=keys,
        rows=rows,
        labels=np.array([m.label for m in cohort.members], dtype=np.int64),
        patient_ids=tuple(m.record.patient_id for m in cohort.members),
        window_length=cohort.members[0].window.span if cohort.members else 0,
    )


def project(matrix: FeatureMatrix, approach: IntegrationApproach) -> FeatureMatrix:
    """Keep exactly the columns whose source belongs to the approach."""
    if approach.kbest:
        raise ConfigError(
            f"{approach.value} requires the elimination stage; project() only "
            "selects by source"
        )
    wanted = approach.sources
    idx = [j for j, k in enumerate(matrix.feature_keys) if k.source in wanted]
    return matrix.take_columns(idx)
