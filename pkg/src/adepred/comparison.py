"""Rank-based comparison of approaches across datasets: Friedman test with
the Iman-Davenport refinement, then the Nemenyi post-hoc critical difference.

Input is a complete datasets x approaches score table (higher is better).
Scores are ranked within each dataset row with midranks for ties, so every
statistic depends only on within-row orderings.

Both the chi-square form and the F form of the Friedman statistic are
reported: they frequently disagree by orders of magnitude in p-value on small
tables, and published analyses rarely say which they used, so this module
never makes the reader guess.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2_dist
from scipy.stats import f as _f_dist
from scipy.stats import rankdata

from .errors import ConfigError, DataError

# Critical values of the studentized range statistic divided by sqrt(2), the
# constant the Nemenyi critical difference is built from. Indexed by the
# number of compared approaches k.
_Q_ALPHA = {
    0.05: {
        2: 1.959964, 3: 2.343701, 4: 2.569032, 5: 2.727774, 6: 2.849705,
        7: 2.948320, 8: 3.030879, 9: 3.102730, 10: 3.163684, 11: 3.218654,
        12: 3.268004, 13: 3.312739, 14: 3.353618, 15: 3.391230, 16: 3.426041,
        17: 3.458425, 18: 3.488685, 19: 3.517073, 20: 3.543799,
    },
    0.10: {
        2: 1.644854, 3: 2.052293, 4: 2.291341, 5: 2.459516, 6: 2.588521,
        7: 2.692732, 8: 2.779884, 9: 2.854606, 10: 2.919889, 11: 2.977768,
        12: 3.029694, 13: 3.076733, 14: 3.119693, 15: 3.159199, 16: 3.195743,
        17: 3.229723, 18: 3.261461, 19: 3.291224, 20: 3.319233,
    },
}


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail P(X >= x) of the chi-square distribution."""
    return float(_chi2_dist.sf(x, df))


def f_sf(x: float, df1: int, df2: int) -> float:
    """Upper tail P(X >= x) of the F distribution."""
    return float(_f_dist.sf(x, df1, df2))


@dataclass(frozen=True)
class ScoreTable:
    """Complete real-valued table: one row per dataset, one column per
    approach, higher scores better."""

    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.row_labels), len(self.col_labels)):
            raise DataError(
                f"table shape {values.shape} does not match "
                f"{len(self.row_labels)} rows x {len(self.col_labels)} columns"
            )
        if len(self.row_labels) < 2 or len(self.col_labels) < 2:
            raise DataError("score table needs at least 2 rows and 2 columns")
        if len(set(self.row_labels)) != len(self.row_labels):
            raise DataError("duplicate dataset labels")
        if len(set(self.col_labels)) != len(self.col_labels):
            raise DataError("duplicate approach labels")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(
                f"non-finite score for row {self.row_labels[i]!r}, "
                f"column {self.col_labels[j]!r}"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def n(self) -> int:
        return len(self.row_labels)

    @property
    def k(self) -> int:
        return len(self.col_labels)

    def to_csv(self) -> str:
        lines = ["dataset," + ",".join(self.col_labels)]
        for i, label in enumerate(self.row_labels):
            cells = [label] + [repr(float(v)) for v in self.values[i]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ScoreTable":
        lines = [ln for ln in text.split("\n") if ln.strip()]
        if len(lines) < 2:
            raise DataError("score table CSV needs a header and data rows")
        header = [c.strip() for c in lines[0].split(",")]
        cols = tuple(header[1:])
        if not cols:
            raise DataError("score table CSV has no approach columns")
        row_labels: list[str] = []
        rows: list[list[float]] = []
        for line in lines[1:]:
            cells = [c.strip() for c in line.split(",")]
            label = cells[0] if cells else ""
            if not label:
                raise DataError(f"row {len(rows) + 1} has no dataset label")
            parsed: list[float] = []
            for j, col in enumerate(cols):
                cell = cells[j + 1] if j + 1 < len(cells) else ""
                if cell == "":
                    raise DataError(
                        f"missing value for row {label!r}, column {col!r}"
                    )
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"bad value {cell!r} for row {label!r}, column {col!r}"
                    ) from None
            if len(cells) > len(cols) + 1 and any(
                c != "" for c in cells[len(cols) + 1 :]
            ):
                raise DataError(f"row {label!r} has more cells than columns")
            row_labels.append(label)
            rows.append(parsed)
        return cls(tuple(row_labels), cols, np.array(rows, dtype=np.float64))


@dataclass(frozen=True)
class FriedmanResult:
    approaches: tuple[str, ...]
    avg_ranks: np.ndarray
    n_datasets: int
    chi_square: float
    chi_square_df: int
    chi_square_p: float
    f_stat: float
    f_df: tuple[int, int]
    f_p: float

    def __post_init__(self) -> None:
        ranks = np.asarray(self.avg_ranks, dtype=np.float64).copy()
        ranks.setflags(write=False)
        object.__setattr__(self, "avg_ranks", ranks)

    def to_csv(self) -> str:
        lines = [
            "metric,value",
            f"n_datasets,{self.n_datasets}",
            f"n_approaches,{len(self.approaches)}",
            f"chi_square,{repr(self.chi_square)}",
            f"chi_square_df,{self.chi_square_df}",
            f"chi_square_p,{repr(self.chi_square_p)}",
            f"iman_davenport_f,{repr(self.f_stat)}",
            f"f_df1,{self.f_df[0]}",
            f"f_df2,{self.f_df[1]}",
            f"f_p,{repr(self.f_p)}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class NemenyiResult:
    approaches: tuple[str, ...]
    avg_ranks: np.ndarray
    alpha: float
    cd: float
    diffs: np.ndarray
    significant: np.ndarray

    def __post_init__(self) -> None:
        for name in ("avg_ranks", "diffs", "significant"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def pairs(self) -> list[tuple[str, str, float, bool]]:
        out = []
        for i in range(len(self.approaches)):
            for j in range(i + 1, len(self.approaches)):
                out.append(
                    (
                        self.approaches[i],
                        self.approaches[j],
                        float(self.diffs[i, j]),
                        bool(self.significant[i, j]),
                    )
                )
        return out

    def is_significant(self, a: str, b: str) -> bool:
        i = self.approaches.index(a)
        j = self.approaches.index(b)
        return bool(self.significant[i, j])

    def to_cd_csv(self) -> str:
        """Critical-difference diagram data: `approach,avg_rank,cd`."""
        lines = ["approach,avg_rank,cd"]
        for name, rank in zip(self.approaches, self.avg_ranks):
            lines.append(f"{name},{repr(float(rank))},{repr(self.cd)}")
        return "\n".join(lines) + "\n"

    def to_pairs_csv(self) -> str:
        lines = ["approach_a,approach_b,rank_diff,significant"]
        for a, b, diff, flag in self.pairs():
            lines.append(f"{a},{b},{repr(diff)},{str(flag).lower()}")
        return "\n".join(lines) + "\n"


def average_ranks(table: ScoreTable) -> np.ndarray:
    """Within each row rank the columns, 1 = best score, midranks on ties;
    then average the ranks per column across rows."""
    ranks = np.vstack([rankdata(-row) for row in table.values])
    return ranks.mean(axis=0)


def friedman_test(table: ScoreTable) -> FriedmanResult:
    """Friedman chi-square plus the Iman-Davenport F refinement.

    When the chi-square reaches its maximum (perfect rank agreement across
    rows) the F denominator hits zero; that limit is reported as an infinite
    F with p = 0 rather than an error.
    """
    n, k = table.n, table.k
    avg = average_ranks(table)
    rank_sums = avg * n
    chi_square = (
        12.0 / (n * k * (k + 1)) * float(np.sum(rank_sums**2)) - 3.0 * n * (k + 1)
    )
    chi_df = k - 1
    denominator = n * (k - 1) - chi_square
    if denominator <= 0:
        f_stat, f_p = np.inf, 0.0
    else:
        f_stat = (n - 1) * chi_square / denominator
        f_p = f_sf(f_stat, k - 1, (k - 1) * (n - 1))
    return FriedmanResult(
        approaches=table.col_labels,
        avg_ranks=avg,
        n_datasets=n,
        chi_square=chi_square,
        chi_square_df=chi_df,
        chi_square_p=chi_square_sf(chi_square, chi_df),
        f_stat=float(f_stat),
        f_df=(k - 1, (k - 1) * (n - 1)),
        f_p=float(f_p),
    )


def nemenyi(table: ScoreTable, alpha: float = 0.05) -> NemenyiResult:
    """Critical difference CD = q_alpha(k) * sqrt(k(k+1)/(6n)); a pair of
    approaches differs significantly when |avg rank difference| >= CD."""
    if alpha not in _Q_ALPHA:
        raise ConfigError(
            f"alpha must be one of {sorted(_Q_ALPHA)}, got {alpha}"
        )
    q_table = _Q_ALPHA[alpha]
    if table.k not in q_table:
        raise ConfigError(
            f"critical values tabulated for 2..20 approaches, got {table.k}"
        )
    avg = average_ranks(table)
    cd = q_table[table.k] * float(np.sqrt(table.k * (table.k + 1) / (6.0 * table.n)))
    diffs = np.abs(avg[:, None] - avg[None, :])
    significant = diffs >= cd
    np.fill_diagonal(significant, False)
    return NemenyiResult(
        approaches=table.col_labels,
        avg_ranks=avg,
        alpha=alpha,
        cd=cd,
        diffs=diffs,
        significant=significant,
    )
