"""Friedman and paired Wilcoxon tests for comparing weighting methods.

The chi-square and normal tails are computed here rather than borrowed, so
the module only needs numpy.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, TooFewBlocks

MIN_BLOCKS = 5
METHOD_LABELS = {"EQ": "EQ", "DW": "DT", "EW": "EW"}
METRIC_COLUMNS = ("(ACC, DPD)", "(ACC, SFN)", "(ROC, DPD)", "(ROC, SFN)")

_EPS = 1e-16
_TINY = 1e-300


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_continued_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_p_series(a, x))
    return _gamma_q_continued_fraction(a, x)


def chi2_sf(x: float, df: int) -> float:
    return gamma_q(df / 2.0, x / 2.0)


def normal_two_sided_p(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def average_ranks(values) -> np.ndarray:
    """1-based ranks with tied values sharing their mean rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_sizes(values) -> np.ndarray:
    _, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    return counts[counts > 1].astype(np.float64)


@dataclass(frozen=True, eq=False)
class HypervolumeTable:
    values: np.ndarray  # rows = replicates, columns = methods
    methods: tuple[str, ...] = ("EQ", "DW", "EW")

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != len(self.methods):
            raise ValueError("values must be replicates x methods")
        if not np.all(np.isfinite(values)):
            raise ValueError("hypervolume table has missing or non-finite cells")

    def column(self, method: str) -> np.ndarray:
        return self.values[:, self.methods.index(method)]


def friedman_test(tbl: HypervolumeTable | np.ndarray) -> tuple[float, float]:
    """Friedman chi-square (tie corrected) and its upper-tail p-value."""
    values = tbl.values if isinstance(tbl, HypervolumeTable) else np.asarray(tbl, dtype=np.float64)
    n, k = values.shape
    if n < MIN_BLOCKS:
        raise TooFewBlocks(f"Friedman test needs at least {MIN_BLOCKS} blocks, got {n}")
    if k < 2:
        raise ValueError("Friedman test needs at least two treatments")
    ranks = np.vstack([average_ranks(row) for row in values])
    rank_sums = ranks.sum(axis=0)
    ties = sum(float(np.sum(t ** 3 - t)) for t in map(_tie_sizes, values))
    correction = 1.0 - ties / (n * k * (k * k - 1))
    if correction <= 0:
        return 0.0, 1.0
    raw = 12.0 / (n * k * (k + 1)) * float(np.sum(rank_sums ** 2)) - 3.0 * n * (k + 1)
    stat = max(raw / correction, 0.0)
    return stat, chi2_sf(stat, k - 1)


@dataclass(frozen=True)
class WilcoxonResult:
    p: float
    w_plus: float
    w_minus: float
    n_used: int
    direction: int  # sign of median(a - b)
    all_zero: bool = False
    low_power: bool = False


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided paired signed-rank test, normal approximation.

    Zero differences are dropped, tied magnitudes share mean ranks, and the
    variance is tie corrected; a 0.5 continuity correction is applied. With
    fewer than five nonzero differences no test is made and ``p`` is 1.0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch("paired samples differ in length")
    if a.size < MIN_BLOCKS:
        raise TooFewBlocks(f"Wilcoxon test needs at least {MIN_BLOCKS} pairs, got {a.size}")
    diff = a - b
    direction = int(np.sign(np.median(diff)))
    d = diff[diff != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(1.0, 0.0, 0.0, 0, direction, all_zero=True, low_power=True)
    ranks = average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    if n < MIN_BLOCKS:
        return WilcoxonResult(1.0, w_plus, w_minus, n, direction, low_power=True)
    mean = n * (n + 1) / 4.0
    ties = _tie_sizes(np.abs(d))
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties ** 3 - ties)) / 48.0
    if var <= 0:
        return WilcoxonResult(1.0, w_plus, w_minus, n, direction, low_power=True)
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return WilcoxonResult(normal_two_sided_p(z), w_plus, w_minus, n, direction)


def bonferroni(p: float, n_comparisons: int) -> float:
    return min(1.0, p * n_comparisons)


@dataclass
class PairwiseResult:
    first: str
    second: str
    wilcoxon_p: float
    adjusted_p: float
    direction: int
    low_power: bool = False

    @property
    def name(self) -> str:
        return f"{self.first}-{self.second}"


@dataclass
class StatReport:
    friedman_statistic: float
    friedman_p: float
    alpha: float = 0.05
    pairwise: dict[str, PairwiseResult] = field(default_factory=dict)
    dataset: str = ""
    metric_pair: str = ""
    n_blocks: int = 0

    @property
    def significant(self) -> bool:
        return self.friedman_p < self.alpha

    def conclusions(self) -> list[str]:
        """Significant dominance relations, e.g. ``["EW>DT", "EW>EQ"]``."""
        out = []
        for res in self.pairwise.values():
            if res.adjusted_p < self.alpha and res.direction != 0:
                win, lose = (res.first, res.second) if res.direction > 0 else (res.second, res.first)
                out.append(f"{METHOD_LABELS.get(win, win)}>{METHOD_LABELS.get(lose, lose)}")
        return out

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "metric_pair": self.metric_pair,
            "n_blocks": self.n_blocks,
            "alpha": self.alpha,
            "friedman_statistic": self.friedman_statistic,
            "friedman_p": self.friedman_p,
            "pairwise": {
                k: {"first": r.first, "second": r.second, "wilcoxon_p": r.wilcoxon_p,
                    "adjusted_p": r.adjusted_p, "direction": r.direction, "low_power": r.low_power}
                for k, r in self.pairwise.items()
            },
            "conclusions": self.conclusions(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StatReport":
        pairwise = {
            k: PairwiseResult(v["first"], v["second"], v["wilcoxon_p"], v["adjusted_p"],
                              v["direction"], v.get("low_power", False))
            for k, v in doc.get("pairwise", {}).items()
        }
        return cls(doc["friedman_statistic"], doc["friedman_p"], doc.get("alpha", 0.05), pairwise,
                   doc.get("dataset", ""), doc.get("metric_pair", ""), doc.get("n_blocks", 0))


PAIR_ORDER = (("EW", "DW"), ("EW", "EQ"), ("DW", "EQ"))


def compare_methods(tbl: HypervolumeTable, alpha: float = 0.05, dataset: str = "",
                    metric_pair: str = "") -> StatReport:
    """Friedman gate followed by Bonferroni-adjusted pairwise Wilcoxon tests."""
    stat, p = friedman_test(tbl)
    report = StatReport(stat, p, alpha, dataset=dataset, metric_pair=metric_pair,
                        n_blocks=tbl.values.shape[0])
    if not report.significant:
        return report
    pairs = [pr for pr in PAIR_ORDER if pr[0] in tbl.methods and pr[1] in tbl.methods]
    if not pairs:
        pairs = list(itertools.combinations(tbl.methods, 2))
    for first, second in pairs:
        res = wilcoxon_signed_rank(tbl.column(first), tbl.column(second))
        pr = PairwiseResult(first, second, res.p, bonferroni(res.p, len(pairs)), res.direction,
                            res.low_power)
        report.pairwise[pr.name] = pr
    return report


def format_table(reports: list[StatReport]) -> str:
    """Plain-text grid: one row per dataset, one column per metric pair."""
    datasets = list(dict.fromkeys(r.dataset for r in reports))
    columns = list(METRIC_COLUMNS)
    for r in reports:
        if r.metric_pair not in columns:
            columns.append(r.metric_pair)
    cells = {(r.dataset, r.metric_pair): ", ".join(r.conclusions()) for r in reports}
    rows = [["Dataset", *columns]]
    for ds in datasets:
        rows.append([ds, *(cells.get((ds, c), "") for c in columns)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
