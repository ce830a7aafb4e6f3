import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoweights.errors import LengthMismatch, TooFewBlocks
from evoweights.stats import (
    HypervolumeTable,
    StatReport,
    average_ranks,
    bonferroni,
    chi2_sf,
    compare_methods,
    format_table,
    friedman_test,
    gamma_q,
    wilcoxon_signed_rank,
)

scipy_stats = pytest.importorskip("scipy.stats")

# Six blocks, three methods; the third method always wins and the first two tie.
# Ranks per row are (1.5, 1.5, 3): rank sums 9, 9, 18.  Tie term per row is 2^3-2 = 6.
HAND_TABLE = np.array([[0.5, 0.5, 0.9]] * 3 + [[0.2, 0.2, 0.4]] * 3)
HAND_STAT = 12.0
HAND_P = math.exp(-6.0)  # chi2 survival with 2 df is exp(-x/2)

# Twenty all-positive differences with distinct magnitudes: W+ = 210, mean 105, var 717.5.
WILCOXON_Z = (210 - 105 - 0.5) / math.sqrt(20 * 21 * 41 / 24)
WILCOXON_P = 2 * (1 - NormalDist().cdf(WILCOXON_Z))


def test_frozen_oracles():
    assert HAND_P == pytest.approx(0.0024787521766663585, rel=1e-15)
    assert WILCOXON_Z == pytest.approx(3.9012639781457623, rel=1e-12)
    assert WILCOXON_P == pytest.approx(9.569173157064625e-05, rel=1e-9)


def test_friedman_hand_example():
    stat, p = friedman_test(HAND_TABLE)
    assert stat == pytest.approx(HAND_STAT, abs=1e-12)
    assert p == pytest.approx(HAND_P, rel=1e-10)


def test_wilcoxon_all_positive():
    a = np.arange(1, 21) / 10.0 + 1.0
    b = np.ones(20)
    res = wilcoxon_signed_rank(a, b)
    assert res.w_plus == 210 and res.w_minus == 0
    assert res.p == pytest.approx(WILCOXON_P, rel=1e-9)
    assert res.direction == 1


@pytest.mark.parametrize("a,x", [(0.5, 0.1), (1.0, 2.0), (1.5, 1.4), (3.0, 10.0), (10.0, 3.0), (0.5, 40.0)])
def test_gamma_q_against_scipy(a, x):
    from scipy.special import gammaincc
    assert gamma_q(a, x) == pytest.approx(gammaincc(a, x), rel=1e-10, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 80.0), st.integers(1, 10))
def test_chi2_sf_against_scipy(x, df):
    assert chi2_sf(x, df) == pytest.approx(scipy_stats.chi2.sf(x, df), rel=1e-9, abs=1e-14)


def test_friedman_against_scipy_random():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(5, 25))
        vals = np.round(rng.random((n, 3)), 1)  # coarse values force ties
        stat, p = friedman_test(vals)
        if np.all(vals == vals[:, :1]):
            continue
        ref = scipy_stats.friedmanchisquare(*vals.T)
        assert stat == pytest.approx(ref.statistic, rel=1e-10)
        assert p == pytest.approx(ref.pvalue, rel=1e-8)


def test_wilcoxon_against_scipy_random():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(8, 30))
        a = np.round(rng.random(n), 2)
        b = np.round(rng.random(n) + rng.normal(0.05, 0.02), 2)
        ref = scipy_stats.wilcoxon(a, b, zero_method="wilcox", correction=True, method="approx")
        assert wilcoxon_signed_rank(a, b).p == pytest.approx(ref.pvalue, rel=1e-8)


def test_wilcoxon_edge_cases():
    x = np.linspace(0, 1, 10)
    same = wilcoxon_signed_rank(x, x)
    assert same.p == 1.0 and same.all_zero and same.low_power
    few = x.copy()
    few[:3] += 0.5
    res = wilcoxon_signed_rank(few, x)
    assert res.p == 1.0 and res.low_power and res.n_used == 3
    with pytest.raises(LengthMismatch):
        wilcoxon_signed_rank(x, x[:-1])
    with pytest.raises(TooFewBlocks):
        wilcoxon_signed_rank(x[:4], x[:4])


def test_friedman_all_tied_and_too_few():
    stat, p = friedman_test(np.ones((8, 3)))
    assert stat == 0.0 and p == 1.0
    with pytest.raises(TooFewBlocks):
        friedman_test(np.random.default_rng(0).random((4, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_invariances(seed):
    rng = np.random.default_rng(seed)
    vals = rng.random((10, 3))
    stat, p = friedman_test(vals)
    # monotone transforms applied per row leave ranks unchanged
    s2, p2 = friedman_test(np.exp(3 * vals) + 2.0)
    assert s2 == pytest.approx(stat) and p2 == pytest.approx(p)
    # permuting rows changes nothing; permuting columns keeps the statistic
    assert friedman_test(vals[rng.permutation(10)])[0] == pytest.approx(stat)
    assert friedman_test(vals[:, rng.permutation(3)])[0] == pytest.approx(stat)
    w = wilcoxon_signed_rank(vals[:, 0], vals[:, 1])
    w_swapped = wilcoxon_signed_rank(vals[:, 1], vals[:, 0])
    assert w.p == pytest.approx(w_swapped.p) and w.direction == -w_swapped.direction


def test_average_ranks():
    assert average_ranks([3, 1, 3, 2]).tolist() == [3.5, 1.0, 3.5, 2.0]


def test_bonferroni():
    assert bonferroni(0.02, 3) == pytest.approx(0.06)
    assert bonferroni(0.5, 3) == 1.0


def test_gate_closed_for_identical_methods():
    col = np.linspace(0.5, 0.9, 10)
    rep = compare_methods(HypervolumeTable(np.column_stack([col, col, col])))
    assert not rep.significant and rep.pairwise == {} and rep.conclusions() == []


def test_ew_dominates():
    rng = np.random.default_rng(0)
    eq = rng.uniform(0.6, 0.7, 20)
    dw = eq + rng.uniform(0.0, 0.01, 20)
    ew = dw + 0.1 + rng.uniform(0.0, 0.01, 20)
    rep = compare_methods(HypervolumeTable(np.column_stack([eq, dw, ew])), dataset="toy",
                          metric_pair="(ACC, DPD)")
    assert rep.significant
    assert {"EW>DT", "EW>EQ"} <= set(rep.conclusions())
    assert set(rep.pairwise) == {"EW-DW", "EW-EQ", "DW-EQ"}
    for r in rep.pairwise.values():
        assert r.adjusted_p == pytest.approx(min(1.0, 3 * r.wilcoxon_p))
    again = StatReport.from_dict(rep.to_dict())
    assert again.conclusions() == rep.conclusions()
    table = format_table([again])
    assert table.splitlines()[0].split()[0] == "Dataset"
    assert "EW>DT" in table.splitlines()[2]


def test_table_rejects_missing_cells():
    with pytest.raises(ValueError):
        HypervolumeTable(np.array([[0.1, np.nan, 0.3]] * 5))
    with pytest.raises(ValueError):
        HypervolumeTable(np.ones((5, 2)))
