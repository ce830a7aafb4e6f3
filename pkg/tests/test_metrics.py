import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TOY_AFTER, TOY_BEFORE, TOY_GROUPS, TOY_Y
from evoweights.errors import LengthMismatch, NoPositives, SingleClass, EmptyInput
from evoweights.metrics import MetricPair, accuracy, auroc, dpd, score_pair, sfn


def auroc_pairwise(y, scores):
    """Brute force over every (positive, negative) pair."""
    conc = ties = 0
    pos = [s for s, t in zip(scores, y) if t == 1]
    neg = [s for s, t in zip(scores, y) if t == 0]
    for p in pos:
        for q in neg:
            conc += p > q
            ties += p == q
    return (conc + 0.5 * ties) / (float(len(pos)) * float(len(neg)))


def sfn_enumerated(y, y_hat, groups):
    """Direct transcription: max over groups of Pr(G, y=1) * |FNR - FNR_G|."""
    n = len(y)
    pos = [i for i in range(n) if y[i] == 1]
    fnr = sum(y_hat[i] == 0 for i in pos) / len(pos)
    best = 0.0
    for g in set(groups):
        gp = [i for i in pos if groups[i] == g]
        if not gp:
            continue
        fnr_g = sum(y_hat[i] == 0 for i in gp) / len(gp)
        best = max(best, len(gp) / n * abs(fnr - fnr_g))
    return best


def test_accuracy_toy_example():
    assert accuracy(TOY_Y, TOY_BEFORE) == pytest.approx(4 / 6, abs=1e-12)
    assert accuracy(TOY_Y, TOY_AFTER) == pytest.approx(4 / 6, abs=1e-12)
    assert accuracy(TOY_Y, TOY_Y) == 1.0


def test_accuracy_errors():
    with pytest.raises(LengthMismatch):
        accuracy([1, 0], [1])
    with pytest.raises(EmptyInput):
        accuracy([], [])


def test_auroc_examples(each_backend):
    assert auroc([1, 0, 1, 0, 0], [0.9, 0.8, 0.4, 0.3, 0.2]) == pytest.approx(5 / 6, abs=1e-15)
    assert auroc([0, 0, 1, 1], [0.1, 0.2, 0.7, 0.9]) == 1.0
    assert auroc([0, 1, 0, 1], [0.3] * 4) == 0.5
    with pytest.raises(SingleClass):
        auroc([1, 1, 1], [0.1, 0.2, 0.3])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 6)), min_size=2, max_size=60))
def test_auroc_matches_pairwise_oracle(rows):
    y = np.array([r[0] for r in rows])
    s = np.array([r[1] / 6 for r in rows])
    if y.min() == y.max():
        return
    assert auroc(y, s) == auroc_pairwise(y, s)


def test_dpd_toy_example():
    assert dpd(TOY_BEFORE, TOY_GROUPS, 2) == pytest.approx(0.75, abs=1e-12)
    assert dpd(TOY_AFTER, TOY_GROUPS, 2) == pytest.approx(0.25, abs=1e-12)
    assert dpd(TOY_BEFORE, np.zeros(6, dtype=int), 1) == 0.0


def test_dpd_ignores_empty_groups():
    assert dpd([1, 0, 1, 1], [0, 0, 2, 2], 4) == pytest.approx(0.5)


def test_toy_degeneracy_outcomes_worse_but_dpd_better():
    # fewer favourable predictions in every group, same accuracy, lower DPD
    for g in (0, 1):
        m = TOY_GROUPS == g
        assert TOY_AFTER[m].sum() <= TOY_BEFORE[m].sum()
    assert accuracy(TOY_Y, TOY_AFTER) == accuracy(TOY_Y, TOY_BEFORE)
    assert dpd(TOY_AFTER, TOY_GROUPS, 2) < dpd(TOY_BEFORE, TOY_GROUPS, 2)


def test_sfn_toy_example():
    expected = sfn_enumerated(TOY_Y, TOY_AFTER, TOY_GROUPS)
    assert expected == pytest.approx(1 / 18, abs=1e-15)
    assert sfn(TOY_Y, TOY_AFTER, TOY_GROUPS, 2) == pytest.approx(0.0556, abs=5e-5)
    assert sfn(TOY_Y, TOY_AFTER, TOY_GROUPS, 2) == pytest.approx(expected, abs=1e-15)


def test_sfn_trivial_cases():
    assert sfn(TOY_Y, TOY_Y, TOY_GROUPS, 2) == 0.0
    assert sfn(TOY_Y, TOY_BEFORE, np.zeros(6, dtype=int), 1) == 0.0
    with pytest.raises(NoPositives):
        sfn([0, 0], [0, 1], [0, 1], 2)


def test_sfn_skips_groups_without_positives():
    y = [1, 1, 0, 0]
    y_hat = [1, 0, 1, 1]
    assert sfn(y, y_hat, [0, 0, 1, 1], 2) == 0.0


labels = st.lists(st.integers(0, 1), min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_metric_ranges_and_invariants(data):
    n = data.draw(st.integers(1, 40))
    y = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    y_hat = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    groups = np.array(data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)))
    assert 0.0 <= accuracy(y, y_hat) <= 1.0
    d = dpd(y_hat, groups, 4)
    assert 0.0 <= d <= 1.0
    # relabeling groups leaves dpd unchanged
    perm = np.array(data.draw(st.permutations(range(4))))
    assert dpd(y_hat, perm[groups], 4) == d
    # max-min equals the maximum over ordered group pairs
    present = [g for g in range(4) if np.any(groups == g)]
    rates = {g: y_hat[groups == g].mean() for g in present}
    pairwise = max((abs(rates[a] - rates[b]) for a, b in itertools.product(present, repeat=2)), default=0.0)
    assert d == pytest.approx(pairwise, abs=1e-15)
    if y.sum() > 0:
        s = sfn(y, y_hat, groups, 4)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(sfn_enumerated(y, y_hat, groups), abs=1e-15)
        assert sfn(y, y, groups, 4) == 0.0


def test_score_pair_dispatch():
    pair = MetricPair.parse("acc", "dpd")
    pt = score_pair(pair, TOY_Y, TOY_BEFORE, TOY_BEFORE.astype(float), TOY_GROUPS, 2)
    assert pt.predictive_score == pytest.approx(0.6667, abs=1e-4)
    assert pt.fairness_score == pytest.approx(0.75)

    y = np.array([0, 1, 1, 0])
    perfect = score_pair(pair, y, y, y.astype(float), np.zeros(4, dtype=int), 1)
    assert (perfect.predictive_score, perfect.fairness_score) == (1.0, 0.0)

    roc_sfn = MetricPair.parse("ROC", "SFN")
    scores = TOY_AFTER.astype(float)
    pt = score_pair(roc_sfn, TOY_Y, TOY_AFTER, scores, TOY_GROUPS, 2)
    assert pt.predictive_score == auroc_pairwise(TOY_Y, scores)
    assert pt.fairness_score == pytest.approx(1 / 18, abs=1e-15)
    assert roc_sfn.label == "(ROC, SFN)"
