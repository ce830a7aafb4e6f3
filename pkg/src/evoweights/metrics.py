"""Predictive and group-fairness metrics for binary classifiers."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import EmptyInput, LengthMismatch, NoPositives, SingleClass

THRESHOLD = 0.5

# SFN weights each group's FNR gap by Pr(in group and y = 1). Set to False
# for the conditional reading Pr(y = 1 | in group).
SFN_JOINT_ALPHA = True


class Predictive(str, Enum):
    ACC = "acc"
    ROC = "roc"


class Fairness(str, Enum):
    DPD = "dpd"
    SFN = "sfn"


@dataclass(frozen=True)
class MetricPair:
    predictive: Predictive
    fairness: Fairness

    @classmethod
    def parse(cls, predictive: str, fairness: str) -> "MetricPair":
        return cls(Predictive(predictive.lower()), Fairness(fairness.lower()))

    @property
    def label(self) -> str:
        return f"({self.predictive.name}, {self.fairness.name})"

    @property
    def slug(self) -> str:
        return f"{self.predictive.value}_{self.fairness.value}"


@dataclass(frozen=True)
class EvaluatedPoint:
    predictive_score: float
    fairness_score: float


def _check(*arrays):
    n = len(arrays[0])
    if any(len(a) != n for a in arrays[1:]):
        raise LengthMismatch("input vectors differ in length")
    if n == 0:
        raise EmptyInput("metrics need at least one row")


def predict_labels(scores) -> np.ndarray:
    return (np.asarray(scores, dtype=np.float64) >= THRESHOLD).astype(np.int64)


def accuracy(y, y_hat) -> float:
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    _check(y, y_hat)
    return float(np.count_nonzero(y == y_hat)) / y.size


def auroc(y, scores) -> float:
    """Area under the ROC curve as the Mann-Whitney rank statistic.

    Ties between a positive and a negative score count one half.

    Raises:
        SingleClass: if ``y`` contains only one class.
    """
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    _check(y, scores)
    n_pos = int(np.count_nonzero(y == 1))
    if n_pos == 0 or n_pos == y.size:
        raise SingleClass("AUROC is undefined when only one class is present")
    return kernels.auc_rank_statistic(y, scores)


def dpd(y_hat, groups, n_groups: int) -> float:
    """Demographic parity difference: spread of acceptance rates over nonempty groups."""
    y_hat = np.asarray(y_hat)
    groups = np.asarray(groups, dtype=np.int64)
    _check(y_hat, groups)
    sizes = np.bincount(groups, minlength=n_groups)
    accepted = np.bincount(groups, weights=(y_hat == 1).astype(np.float64), minlength=n_groups)
    present = sizes > 0
    if np.count_nonzero(present) < 2:
        return 0.0
    rates = accepted[present] / sizes[present]
    return float(rates.max() - rates.min())


def sfn(y, y_hat, groups, n_groups: int) -> float:
    """Subgroup false negative fairness.

    Largest ``alpha(G) * |FNR - FNR_G|`` over groups, where ``alpha(G)`` is
    the share of all rows that are positive and in ``G`` (see
    ``SFN_JOINT_ALPHA``). Groups without positives are skipped.
    """
    y = np.asarray(y)
    y_hat = np.asarray(y_hat)
    groups = np.asarray(groups, dtype=np.int64)
    _check(y, y_hat, groups)
    pos = y == 1
    n_pos_total = int(np.count_nonzero(pos))
    if n_pos_total == 0:
        raise NoPositives("SFN needs at least one positive label")
    missed = pos & (y_hat != 1)
    fnr_all = np.count_nonzero(missed) / n_pos_total
    pos_g = np.bincount(groups[pos], minlength=n_groups)
    fn_g = np.bincount(groups[missed], minlength=n_groups)
    sizes = np.bincount(groups, minlength=n_groups)
    best = 0.0
    for g in np.flatnonzero(pos_g):
        alpha = pos_g[g] / y.size if SFN_JOINT_ALPHA else pos_g[g] / sizes[g]
        beta = abs(fnr_all - fn_g[g] / pos_g[g])
        best = max(best, alpha * beta)
    return float(best)


def score_pair(pair: MetricPair, y, y_hat, scores, groups, n_groups: int) -> EvaluatedPoint:
    if pair.predictive is Predictive.ACC:
        predictive = accuracy(y, y_hat)
    else:
        predictive = auroc(y, scores)
    if pair.fairness is Fairness.DPD:
        fairness = dpd(y_hat, groups, n_groups)
    else:
        fairness = sfn(y, y_hat, groups, n_groups)
    return EvaluatedPoint(predictive, fairness)
