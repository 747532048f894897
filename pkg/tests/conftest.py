"""Shared fixtures: the canonical synthetic benchmark, cached per session, and
a terminal summary block with one PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import pytest

from adepred.cli import load_synth_config
from adepred.features import build_matrix
from adepred.ingest import CohortConfig, FileFormat, build_cohort, parse_events
from adepred.synth import generate

REPO_ROOT = Path(__file__).resolve().parents[1]
CANONICAL_CONFIG = REPO_ROOT / "configs" / "synth_canonical.yaml"


def matrix_from_synth(config):
    """Full pipeline: generate -> parse -> cohort -> feature matrix."""
    data, manifest = generate(config)
    parsed = parse_events(data, FileFormat.CSV)
    assert not parsed.issues
    cohort = build_cohort(
        parsed.records,
        CohortConfig(
            target_code=config.target_code,
            window_length_days=config.window_length_days,
        ),
    )
    return build_matrix(cohort), manifest


class CanonicalBenchmark:
    """Lazily built canonical datasets keyed by seed offset, so the acceptance
    criteria and the property tests share one generation pass per seed."""

    def __init__(self):
        self.base = load_synth_config(CANONICAL_CONFIG)
        self._cache: dict[int, tuple] = {}

    def config(self, offset: int = 0):
        return replace(self.base, seed=self.base.seed + offset)

    def dataset(self, offset: int = 0):
        if offset not in self._cache:
            self._cache[offset] = matrix_from_synth(self.config(offset))
        return self._cache[offset]

    def matrix(self, offset: int = 0):
        return self.dataset(offset)[0]

    def manifest(self, offset: int = 0):
        return self.dataset(offset)[1]

    @property
    def planted(self) -> frozenset[str]:
        return frozenset(e["feature"] for e in self.manifest(0)["informative"])


@pytest.fixture(scope="session")
def benchmark() -> CanonicalBenchmark:
    return CanonicalBenchmark()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[str, str] = {}
    for status, flag in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                if flag == "FAIL" or name not in results:
                    results[name] = flag
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(results):
        terminalreporter.write_line(f"{results[name]}  {name}")
