"""Core domain types: timestamped medical events, patient records, labeled cohorts.

Timestamps are integer day indices relative to a dataset epoch (the ingest
layer converts calendar dates). All types are immutable after construction and
all operations are pure, so values can be shared freely across workers.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class EventKind(Enum):
    """Event sources: continuous lab measurements, categorical drug and
    diagnosis codes."""

    LAB = "lab"
    DRUG = "drug"
    DIAGNOSIS = "diag"

    @property
    def is_continuous(self) -> bool:
        return self is EventKind.LAB


@dataclass(frozen=True)
class Event:
    """One medical event: a code, its kind, a day index, and (for labs) a value.

    Construction is deliberately permissive so malformed events can be built
    and then reported by :func:`validate_record`; the value/kind invariant is
    checked there, not here.
    """

    code: str
    kind: EventKind
    timestamp: int
    value: float | None = None


@dataclass(frozen=True)
class PatientRecord:
    """A single patient's event history, sorted non-decreasing by timestamp.

    Ties at the same timestamp keep input order.
    """

    patient_id: str
    events: tuple[Event, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.events, tuple):
            object.__setattr__(self, "events", tuple(self.events))


@dataclass(frozen=True)
class Window:
    """A closed time window [t_start, t_end] in day indices."""

    t_start: int
    t_end: int

    def __post_init__(self) -> None:
        if self.t_start > self.t_end:
            raise ValueError(
                f"window start {self.t_start} is after end {self.t_end}"
            )

    @property
    def span(self) -> int:
        return self.t_end - self.t_start

    def contains(self, timestamp: int) -> bool:
        return self.t_start <= timestamp <= self.t_end


@dataclass(frozen=True)
class Violation:
    """One record-invariant violation, located by event index."""

    index: int
    message: str


@dataclass(frozen=True)
class CohortMember:
    """A labeled patient: 1 = case, 0 = control, with its observation window.

    The member's record is the feature view: events carrying the cohort's
    target code have already been stripped by the cohort builder.
    """

    record: PatientRecord
    label: int
    window: Window


@dataclass(frozen=True)
class Cohort:
    """Labeled patient records for one studied adverse event code."""

    target_code: str
    members: tuple[CohortMember, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.members, tuple):
            object.__setattr__(self, "members", tuple(self.members))

    def labels(self) -> list[int]:
        return [m.label for m in self.members]

    def class_counts(self) -> tuple[int, int]:
        """(n_positive, n_negative)."""
        pos = sum(m.label for m in self.members)
        return pos, len(self.members) - pos


def slice_window(record: PatientRecord, window: Window) -> tuple[Event, ...]:
    """Events of `record` with t_start <= timestamp <= t_end, order preserved.

    Requires the record to be sorted by timestamp (binary search on the
    boundaries). Returns a fresh tuple with no coupling to the record.
    """
    stamps = [e.timestamp for e in record.events]
    lo = bisect_left(stamps, window.t_start)
    hi = bisect_right(stamps, window.t_end)
    return record.events[lo:hi]


def validate_record(record: PatientRecord) -> tuple[Violation, ...]:
    """Check every record invariant; an empty result means the record is valid.

    Never raises: each violation is reported with the index of the offending
    event so callers can log or repair.
    """
    violations: list[Violation] = []
    previous = None
    for i, event in enumerate(record.events):
        if previous is not None and event.timestamp < previous:
            violations.append(Violation(i, "unsorted timestamp"))
        previous = event.timestamp
        if event.kind.is_continuous:
            if event.value is None:
                violations.append(Violation(i, "missing value on lab event"))
            elif not math.isfinite(event.value):
                violations.append(Violation(i, "non-finite value"))
        elif event.value is not None:
            violations.append(Violation(i, "value on categorical event"))
    return tuple(violations)
