"""Synthetic cohort generator with planted, source-attributed signal.

Every learning-stage property test needs ground truth; this generator plants
it. Positives differ from controls only through the configured informative
keys: count_shift keys get extra in-window occurrences of a categorical code,
slope_shift keys tilt a lab series that every patient (case or control)
receives, so the signal lives in the trend value, never in missingness.

Output is the ingest CSV interchange format, so tests exercise the full
parse -> cohort -> matrix path. Generation is deterministic per seed: each
patient draws from its own generator spawned off the config seed, and rows
are emitted in a fixed sort order, so files are byte-identical across runs
and platforms.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError
from .features import FeatureKey, Source

_EPOCH = datetime.date(2009, 1, 1)
_EXTRA_HISTORY_DAYS = 60
_LAB_BASELINE = 100.0
_INFORMATIVE_LAB_POINTS = (3, 5)

_KIND_BY_SOURCE = {Source.L: "lab", Source.M: "drug", Source.D: "diag"}
_PREFIX = {Source.L: "LAB", Source.M: "DRG", Source.D: "DX"}


def code_universe(source: Source, size: int) -> tuple[str, ...]:
    """Code names for one source: LAB000.., DRG000.., DX000.. ."""
    return tuple(f"{_PREFIX[source]}{i:03d}" for i in range(size))


class Effect(Enum):
    COUNT_SHIFT = "count_shift"
    SLOPE_SHIFT = "slope_shift"


@dataclass(frozen=True)
class PlantedEffect:
    """One informative feature: positives receive this effect, controls the
    background behavior only."""

    key: FeatureKey
    effect: Effect
    magnitude: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.magnitude):
            raise ConfigError(f"magnitude for {self.key.name} must be finite")
        if self.effect is Effect.SLOPE_SHIFT and self.key.source is not Source.L:
            raise ConfigError(
                f"slope_shift applies to lab keys only, got {self.key.name}"
            )
        if self.effect is Effect.COUNT_SHIFT and self.key.source is Source.L:
            raise ConfigError(
                f"count_shift applies to categorical keys only, got {self.key.name}"
            )
        if self.effect is Effect.COUNT_SHIFT and self.magnitude < 0:
            raise ConfigError(
                f"count_shift magnitude must be >= 0, got {self.magnitude}"
            )


@dataclass(frozen=True)
class SynthConfig:
    n_patients: int
    positive_fraction: float
    n_lab_codes: int
    n_drug_codes: int
    n_diag_codes: int
    informative: tuple[PlantedEffect, ...]
    events_per_patient: int
    window_length_days: int
    seed: int = 0
    target_code: str = "ADE001"
    background: str = "uniform"
    lab_noise_sd: float = 2.0
    in_window_fraction: float = 0.7

    def __post_init__(self) -> None:
        object.__setattr__(self, "informative", tuple(self.informative))
        if self.n_patients < 2:
            raise ConfigError(f"n_patients must be >= 2, got {self.n_patients}")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ConfigError(
                f"positive_fraction must be in (0, 1), got {self.positive_fraction}"
            )
        for name in ("n_lab_codes", "n_drug_codes", "n_diag_codes"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.n_lab_codes + self.n_drug_codes + self.n_diag_codes < 1:
            raise ConfigError("at least one code universe must be non-empty")
        if self.events_per_patient < 0:
            raise ConfigError(
                f"events_per_patient must be >= 0, got {self.events_per_patient}"
            )
        if self.window_length_days < 1:
            raise ConfigError(
                f"window_length_days must be >= 1, got {self.window_length_days}"
            )
        if self.background not in ("uniform", "zipf"):
            raise ConfigError(
                f"background must be 'uniform' or 'zipf', got {self.background!r}"
            )
        if self.lab_noise_sd < 0:
            raise ConfigError(f"lab_noise_sd must be >= 0, got {self.lab_noise_sd}")
        if not 0.0 < self.in_window_fraction <= 1.0:
            raise ConfigError(
                f"in_window_fraction must be in (0, 1], got {self.in_window_fraction}"
            )
        universes = {
            Source.L: set(code_universe(Source.L, self.n_lab_codes)),
            Source.M: set(code_universe(Source.M, self.n_drug_codes)),
            Source.D: set(code_universe(Source.D, self.n_diag_codes)),
        }
        for planted in self.informative:
            if planted.key.code not in universes[planted.key.source]:
                raise ConfigError(
                    f"informative key {planted.key.name} is outside the "
                    "configured code universe"
                )
        if any(code == self.target_code for u in universes.values() for code in u):
            raise ConfigError(
                f"target_code {self.target_code!r} collides with a background code"
            )

    @property
    def n_positive(self) -> int:
        return min(
            max(int(round(self.n_patients * self.positive_fraction)), 1),
            self.n_patients - 1,
        )


def _background_weights(size: int, background: str) -> np.ndarray | None:
    if background == "uniform" or size == 0:
        return None
    weights = (np.arange(size, dtype=np.float64) + 1.0) ** -1.5
    return weights / weights.sum()


def _patient_events(config: SynthConfig, rng: np.random.Generator, positive: bool):
    """(day, kind, code, value-or-None) tuples for one patient; max day is the
    index day t_e and nothing comes after it."""
    w = config.window_length_days
    t_e = w + int(rng.integers(0, _EXTRA_HISTORY_DAYS + 1))
    t_start = t_e - w
    events: list[tuple[int, str, str, float | None]] = []

    sources = []
    sizes = []
    for source, size in (
        (Source.L, config.n_lab_codes),
        (Source.M, config.n_drug_codes),
        (Source.D, config.n_diag_codes),
    ):
        if size > 0:
            sources.append(source)
            sizes.append(size)
    source_p = np.array(sizes, dtype=np.float64) / sum(sizes)
    weights = {
        s: _background_weights(size, config.background)
        for s, size in zip(sources, sizes)
    }

    def draw_day() -> int:
        if t_start == 0 or rng.random() < config.in_window_fraction:
            return int(rng.integers(t_start, t_e + 1))
        return int(rng.integers(0, t_start))

    def background_event(day: int) -> tuple[int, str, str, float | None]:
        source = sources[int(rng.choice(len(sources), p=source_p))]
        size = sizes[sources.index(source)]
        idx = int(rng.choice(size, p=weights[source]))
        code = f"{_PREFIX[source]}{idx:03d}"
        value = None
        if source is Source.L:
            value = _LAB_BASELINE + rng.normal(0.0, config.lab_noise_sd)
        return (day, _KIND_BY_SOURCE[source], code, value)

    for _ in range(rng.poisson(config.events_per_patient)):
        events.append(background_event(draw_day()))

    # The anchor pins every patient's last event to t_e, so control windows
    # (last_event policy) line up with where the signal was planted, and both
    # classes share the same count of non-target events at the index day.
    events.append(background_event(t_e))

    for planted in config.informative:
        if planted.effect is Effect.SLOPE_SHIFT:
            lo, hi = _INFORMATIVE_LAB_POINTS
            n_pts = min(int(rng.integers(lo, hi + 1)), w + 1)
            days = np.sort(
                rng.choice(np.arange(t_start, t_e + 1), size=n_pts, replace=False)
            )
            slope = planted.magnitude if positive else 0.0
            for day in days:
                value = (
                    _LAB_BASELINE
                    + slope * (float(day) - t_e)
                    + rng.normal(0.0, config.lab_noise_sd)
                )
                events.append((int(day), "lab", planted.key.code, value))
        elif positive:
            kind = _KIND_BY_SOURCE[planted.key.source]
            for _ in range(rng.poisson(planted.magnitude)):
                day = int(rng.integers(t_start, t_e + 1))
                events.append((day, kind, planted.key.code, None))

    if positive:
        events.append((t_e, "diag", config.target_code, None))

    events.sort(key=lambda e: (e[0], e[1], e[2], -math.inf if e[3] is None else e[3]))
    return events


def generate(config: SynthConfig) -> tuple[bytes, dict]:
    """Build (event CSV bytes, ground-truth manifest).

    The first round(n_patients * positive_fraction) patient ids are the
    positives; the manifest lists them along with every planted key.
    """
    id_width = max(4, len(str(config.n_patients - 1)))
    n_pos = config.n_positive

    streams = np.random.SeedSequence(config.seed).spawn(config.n_patients)
    lines = ["patient_id,kind,code,value,date"]
    positive_ids = []
    for i in range(config.n_patients):
        pid = f"P{i:0{id_width}d}"
        positive = i < n_pos
        if positive:
            positive_ids.append(pid)
        rng = np.random.default_rng(streams[i])
        for day, kind, code, value in _patient_events(config, rng, positive):
            date = (_EPOCH + datetime.timedelta(days=day)).isoformat()
            cell = "" if value is None else repr(float(value))
            lines.append(f"{pid},{kind},{code},{cell},{date}")

    manifest = {
        "seed": config.seed,
        "target_code": config.target_code,
        "n_patients": config.n_patients,
        "n_positive": n_pos,
        "positive_fraction": config.positive_fraction,
        "window_length_days": config.window_length_days,
        "events_per_patient": config.events_per_patient,
        "background": config.background,
        "lab_noise_sd": config.lab_noise_sd,
        "in_window_fraction": config.in_window_fraction,
        "universes": {
            "L": config.n_lab_codes,
            "M": config.n_drug_codes,
            "D": config.n_diag_codes,
        },
        "informative": [
            {
                "feature": p.key.name,
                "effect": p.effect.value,
                "magnitude": p.magnitude,
            }
            for p in config.informative
        ],
        "positive_ids": positive_ids,
    }
    return ("\n".join(lines) + "\n").encode("utf-8"), manifest
