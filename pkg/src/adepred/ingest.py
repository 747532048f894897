"""Event-file parsing and cohort assembly.

Reads event rows from CSV or JSONL, groups them into per-patient records with
day-index timestamps, then labels patients against a target code and anchors
each one's observation window.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Mapping

from .errors import ConfigError, DataError
from .events import Cohort, CohortMember, Event, EventKind, PatientRecord, Window

CSV_HEADER = ("patient_id", "kind", "code", "value", "date")

_KIND_BY_NAME = {k.value: k for k in EventKind}


class FileFormat(Enum):
    CSV = "csv"
    JSONL = "jsonl"


class ControlIndexPolicy(Enum):
    """How the index date t_e is chosen for patients without the target code."""

    LAST_EVENT = "last_event"
    RANDOM_EVENT = "random_event"


@dataclass(frozen=True)
class CohortConfig:
    """Cohort assembly parameters for one target code.

    window_length_days is the lookback w: each member's window is
    [t_e - w, t_e], with the right edge moved to t_e - 1 when
    include_index_day is false.
    """

    target_code: str
    window_length_days: int
    control_index_policy: ControlIndexPolicy = ControlIndexPolicy.LAST_EVENT
    include_index_day: bool = True
    min_events_in_window: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.target_code:
            raise ConfigError("target_code must be non-empty")
        if self.window_length_days < 1:
            raise ConfigError(
                f"window_length_days must be >= 1, got {self.window_length_days}"
            )
        if self.min_events_in_window < 0:
            raise ConfigError(
                f"min_events_in_window must be >= 0, got {self.min_events_in_window}"
            )


@dataclass(frozen=True)
class ParseIssue:
    """One skipped input row, located by 1-based line number."""

    line: int
    message: str


@dataclass(frozen=True)
class ParseResult:
    records: Mapping[str, PatientRecord]
    issues: tuple[ParseIssue, ...] = ()
    epoch: datetime.date | None = None

    @property
    def n_events(self) -> int:
        return sum(len(r.events) for r in self.records.values())


@dataclass
class _RawRow:
    line: int
    patient_id: str
    kind: EventKind
    code: str
    value: float | None
    date: datetime.date


def _check_row(
    line: int,
    patient_id: str,
    kind_name: str,
    code: str,
    value_text: str | float | None,
    date_text: str,
) -> _RawRow | ParseIssue:
    """Validate one logical row; returns the row or the reason it was skipped."""
    if not patient_id:
        return ParseIssue(line, "empty patient_id")
    kind = _KIND_BY_NAME.get(kind_name)
    if kind is None:
        return ParseIssue(line, f"unknown kind {kind_name!r}")
    if not code:
        return ParseIssue(line, "empty code")
    # Ids and codes flow into downstream CSV reports verbatim, so CSV
    # metacharacters are rejected here rather than quoted everywhere else.
    if any(c in patient_id or c in code for c in ',"\n\r'):
        return ParseIssue(line, "patient_id or code contains , \" or newline")
    try:
        date = datetime.date.fromisoformat(date_text)
    except (TypeError, ValueError):
        return ParseIssue(line, f"bad date {date_text!r}")

    value: float | None
    if value_text is None or value_text == "":
        value = None
    else:
        try:
            value = float(value_text)
        except (TypeError, ValueError):
            return ParseIssue(line, f"bad value {value_text!r}")
    if kind.is_continuous and value is None:
        return ParseIssue(line, "lab row without value")
    if not kind.is_continuous and value is not None:
        return ParseIssue(line, f"{kind_name} row carries a value")
    return _RawRow(line, patient_id, kind, code, value, date)


def _iter_csv(text: io.TextIOBase) -> list[_RawRow | ParseIssue]:
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        return []
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise DataError(
            f"bad CSV header {header!r}; expected {','.join(CSV_HEADER)}"
        )
    out: list[_RawRow | ParseIssue] = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            out.append(ParseIssue(line, f"expected 5 fields, got {len(row)}"))
            continue
        out.append(_check_row(line, row[0], row[1], row[2], row[3], row[4]))
    return out


def _iter_jsonl(text: io.TextIOBase) -> list[_RawRow | ParseIssue]:
    out: list[_RawRow | ParseIssue] = []
    for line, raw in enumerate(text, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            out.append(ParseIssue(line, f"bad JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            out.append(ParseIssue(line, "row is not an object"))
            continue
        unknown = set(obj) - set(CSV_HEADER)
        if unknown:
            out.append(ParseIssue(line, f"unknown keys {sorted(unknown)}"))
            continue
        out.append(
            _check_row(
                line,
                str(obj.get("patient_id", "") or ""),
                str(obj.get("kind", "") or ""),
                str(obj.get("code", "") or ""),
                obj.get("value"),
                str(obj.get("date", "") or ""),
            )
        )
    return out


def parse_events(source: BinaryIO | bytes, fmt: FileFormat) -> ParseResult:
    """Parse an event stream into per-patient records.

    Timestamps become day indices relative to the earliest date among the
    well-formed rows. Malformed rows are skipped and reported in
    ``ParseResult.issues`` with their line numbers; an undecodable stream or a
    wrong CSV header is fatal.
    """
    data = source if isinstance(source, bytes) else source.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"event stream is not valid UTF-8: {exc}") from exc

    buf = io.StringIO(text)
    if fmt is FileFormat.CSV:
        parsed = _iter_csv(buf)
    else:
        parsed = _iter_jsonl(buf)

    rows = [p for p in parsed if isinstance(p, _RawRow)]
    issues = tuple(p for p in parsed if isinstance(p, ParseIssue))
    if not rows:
        return ParseResult(records={}, issues=issues, epoch=None)

    epoch = min(r.date for r in rows)
    by_patient: dict[str, list[_RawRow]] = {}
    for r in rows:
        by_patient.setdefault(r.patient_id, []).append(r)

    records: dict[str, PatientRecord] = {}
    for pid in sorted(by_patient):
        group = sorted(by_patient[pid], key=lambda r: (r.date - epoch).days)
        events = tuple(
            Event(r.code, r.kind, (r.date - epoch).days, r.value) for r in group
        )
        records[pid] = PatientRecord(pid, events)
    return ParseResult(records=records, issues=issues, epoch=epoch)


def _control_index(
    record: PatientRecord, policy: ControlIndexPolicy, seed: int
) -> int:
    stamps = [e.timestamp for e in record.events]
    if policy is ControlIndexPolicy.LAST_EVENT:
        return stamps[-1]
    # Per-patient stream keyed on (seed, patient_id): draws do not depend on
    # which other patients are present.
    rng = random.Random(f"{seed}:{record.patient_id}")
    return rng.choice(stamps)


def build_cohort(
    records: Mapping[str, PatientRecord], config: CohortConfig
) -> Cohort:
    """Label patients against ``config.target_code`` and anchor their windows.

    Patients with the target code become positives anchored at its FIRST
    occurrence; the rest become negatives with t_e chosen by the control
    policy. Events carrying the target code (any kind) are stripped from every
    member's view, and the minimum-event filter counts the remaining in-window
    events, so it measures usable predictor data.

    Patients with no events at all are dropped (no index date exists).
    """
    if not records:
        raise DataError("no patient records to build a cohort from")

    members: list[CohortMember] = []
    n_pos = n_neg = 0
    for pid in sorted(records):
        record = records[pid]
        if not record.events:
            continue
        target_stamps = [
            e.timestamp for e in record.events if e.code == config.target_code
        ]
        if target_stamps:
            label, t_e = 1, target_stamps[0]
        else:
            label, t_e = 0, _control_index(
                record, config.control_index_policy, config.seed
            )
        t_end = t_e if config.include_index_day else t_e - 1
        window = Window(t_e - config.window_length_days, t_end)

        view = tuple(e for e in record.events if e.code != config.target_code)
        in_window = sum(window.contains(e.timestamp) for e in view)
        if in_window < config.min_events_in_window:
            continue
        members.append(
            CohortMember(PatientRecord(pid, view), label, window)
        )
        if label:
            n_pos += 1
        else:
            n_neg += 1

    if n_pos == 0 or n_neg == 0:
        raise DataError(
            f"degenerate cohort for {config.target_code!r}: "
            f"{n_pos} positives, {n_neg} negatives after filtering"
        )
    return Cohort(target_code=config.target_code, members=tuple(members))
