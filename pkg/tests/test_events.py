"""Domain types: windows, records, window slicing, record validation."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adepred.events import (
    Cohort,
    CohortMember,
    Event,
    EventKind,
    PatientRecord,
    Window,
    slice_window,
    validate_record,
)


def lab(day, value, code="LAB000"):
    return Event(code, EventKind.LAB, day, value)


def drug(day, code="DRG000"):
    return Event(code, EventKind.DRUG, day)


class TestWindow:
    def test_rejects_inverted_bounds(self):
        with pytest.raises(ValueError):
            Window(5, 4)

    def test_single_day_window_is_valid(self):
        w = Window(3, 3)
        assert w.span == 0
        assert w.contains(3)
        assert not w.contains(2) and not w.contains(4)

    def test_contains_is_inclusive_on_both_ends(self):
        w = Window(10, 40)
        assert w.contains(10) and w.contains(40)
        assert not w.contains(9) and not w.contains(41)


class TestSliceWindow:
    def test_boundary_events_are_kept(self):
        record = PatientRecord("p", (drug(9), drug(10), drug(25), drug(40), drug(41)))
        got = slice_window(record, Window(10, 40))
        assert [e.timestamp for e in got] == [10, 25, 40]

    def test_empty_record(self):
        assert slice_window(PatientRecord("p", ()), Window(0, 10)) == ()

    def test_preserves_input_order_on_ties(self):
        record = PatientRecord("p", (drug(5, "a"), drug(5, "b"), drug(5, "c")))
        got = slice_window(record, Window(5, 5))
        assert [e.code for e in got] == ["a", "b", "c"]

    @given(
        stamps=st.lists(st.integers(-50, 50), max_size=30).map(sorted),
        lo=st.integers(-60, 60),
        span=st.integers(0, 40),
    )
    def test_matches_linear_filter(self, stamps, lo, span):
        record = PatientRecord("p", tuple(drug(t) for t in stamps))
        window = Window(lo, lo + span)
        got = slice_window(record, window)
        want = tuple(e for e in record.events if window.contains(e.timestamp))
        assert got == want


class TestValidateRecord:
    def test_valid_record_has_no_violations(self):
        record = PatientRecord("p", (lab(0, 98.5), drug(1), lab(1, 99.0)))
        assert validate_record(record) == ()

    def test_unsorted_timestamps_flagged_at_offending_index(self):
        record = PatientRecord("p", (drug(5), drug(3)))
        violations = validate_record(record)
        assert len(violations) == 1
        assert violations[0].index == 1
        assert "unsorted" in violations[0].message

    def test_lab_without_value(self):
        violations = validate_record(PatientRecord("p", (Event("L1", EventKind.LAB, 0),)))
        assert [v.message for v in violations] == ["missing value on lab event"]

    def test_non_finite_lab_value(self):
        violations = validate_record(PatientRecord("p", (lab(0, math.nan),)))
        assert [v.message for v in violations] == ["non-finite value"]

    def test_categorical_with_value(self):
        bad = Event("Z51.1", EventKind.DIAGNOSIS, 0, 5.0)
        violations = validate_record(PatientRecord("p", (bad,)))
        assert [v.message for v in violations] == ["value on categorical event"]

    def test_multiple_violations_all_reported(self):
        record = PatientRecord(
            "p", (drug(5), Event("L1", EventKind.LAB, 2), lab(7, math.inf))
        )
        violations = validate_record(record)
        assert {(v.index, v.message) for v in violations} == {
            (1, "unsorted timestamp"),
            (1, "missing value on lab event"),
            (2, "non-finite value"),
        }


class TestCohort:
    def test_class_counts(self):
        member = lambda pid, label: CohortMember(
            PatientRecord(pid, (drug(0),)), label, Window(0, 5)
        )
        cohort = Cohort("X", (member("a", 1), member("b", 0), member("c", 1)))
        assert cohort.class_counts() == (2, 1)
        assert cohort.labels() == [1, 0, 1]

    def test_members_coerced_to_tuple(self):
        cohort = Cohort("X", [])
        assert cohort.members == ()
