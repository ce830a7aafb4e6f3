import numpy as np
import pytest
from scipy.stats import chisquare

from evoweights.dataset import build_group_index, kfold_indices, make_biased_dataset
from evoweights.errors import ConfigError, LengthMismatch
from evoweights.ga import (
    WORST_FITNESS,
    GAConfig,
    Individual,
    assign_rank_and_crowding,
    crossover,
    crowding_distance,
    cv_fitness,
    fast_nondominated_sort,
    initialize_pop,
    load_archive,
    mutate,
    run_ga,
    survival_selection,
    tournament_select,
)
from evoweights.metrics import MetricPair, score_pair
from evoweights.model import FitCounter, ModelSpec, fit, predict_labels, predict_scores
from evoweights.reweight import deterministic_weights, equal_weights, expand_and_assign

ACC_DPD = MetricPair.parse("acc", "dpd")


def brute_ranks(points):
    """Peel nondominated layers by exhaustive pairwise checks (maximize first, minimize second)."""
    pts = [tuple(p) for p in points]
    ranks = [-1] * len(pts)
    remaining = set(range(len(pts)))
    r = 0
    while remaining:
        layer = [i for i in remaining if not any(
            pts[j][0] >= pts[i][0] and pts[j][1] <= pts[i][1] and pts[j] != pts[i]
            for j in remaining)]
        for i in layer:
            ranks[i] = r
        remaining -= set(layer)
        r += 1
    return ranks


def ind(pred, fair, rank=0, crowd=0.0, idx=0):
    return Individual(genome=np.zeros(4), id=idx, predictive_fitness=pred, fairness_fitness=fair,
                      rank=rank, crowding=crowd)


@pytest.fixture(scope="module")
def small():
    ds = make_biased_dataset(n_rows=300, seed=11)
    return ds, build_group_index(ds)


# ---------------------------------------------------------------------------
# config and operators

def test_config_budget_rules():
    assert GAConfig().evaluation_budget == 1000
    assert GAConfig.for_budget(1000).max_gen == 50
    with pytest.raises(ConfigError):
        GAConfig(pop_size=20, max_gen=50, evaluation_budget=1020)
    with pytest.raises(ConfigError):
        GAConfig.for_budget(1010)
    with pytest.raises(ConfigError):
        GAConfig(crossover_prob=1.5)


def test_initial_population_in_bounds():
    cfg = GAConfig(pop_size=500)
    pop = initialize_pop(cfg, np.random.default_rng(0))
    g = np.array([p.genome for p in pop])
    assert g.min() >= 0.0 and g.max() < 2.0
    assert g.min() < 0.05 and g.max() > 1.95
    assert [p.id for p in pop] == list(range(500))


def test_crossover_examples():
    rng = np.random.default_rng(0)
    a = np.array([0.3, 1.1, 1.9, 0.0])
    assert np.array_equal(crossover(a, a, rng), a)
    b = np.array([1.0, 1.0, 1.0, 1.0])
    for _ in range(50):
        assert np.array_equal(crossover(a, b, rng, p=0.0), a)
    with pytest.raises(LengthMismatch):
        crossover(a, b[:3], rng)


def test_crossover_uniform_mixing():
    rng = np.random.default_rng(1)
    zeros, twos = np.zeros(4), np.full(4, 2.0)
    kids = np.array([crossover(zeros, twos, rng, p=1.0) for _ in range(10_000)])
    assert set(np.unique(kids)) <= {0.0, 2.0}
    assert np.all(np.abs(kids.mean(axis=0) - 1.0) < 0.05)


def test_mutation_examples_and_rate():
    rng = np.random.default_rng(2)
    g = np.array([0.5, 1.0, 1.5, 2.0])
    assert np.array_equal(mutate(g, rng, per_gene_p=0.0), g)
    top = mutate(np.full(4, 2.0), rng, per_gene_p=1.0, sigma=1e6)
    assert np.all((top == 2.0) | (top == 0.0))
    base = np.full((25_000, 4), 1.0)
    out = np.array([mutate(row, rng) for row in base])
    rate = np.mean(out != 1.0)
    assert abs(rate - 0.10) < 0.01


def test_bounds_after_many_operator_applications():
    rng = np.random.default_rng(3)
    pop = [rng.uniform(0, 2, 4) for _ in range(20)]
    for _ in range(10_000):
        i, j = rng.integers(0, 20, 2)
        child = mutate(crossover(pop[i], pop[j], rng), rng, per_gene_p=0.5, sigma=3.0)
        assert child.min() >= 0.0 and child.max() <= 2.0
        pop[int(rng.integers(0, 20))] = child


# ---------------------------------------------------------------------------
# nondominated sorting and crowding

def test_sort_examples():
    assert fast_nondominated_sort([(0.9, 0.1), (0.8, 0.05), (0.7, 0.2)]).tolist() == [0, 0, 1]
    assert fast_nondominated_sort([(0.5, 0.5)] * 4).tolist() == [0, 0, 0, 0]
    trade_off = [(k / 10, k / 10) for k in range(6)]
    assert set(fast_nondominated_sort(trade_off).tolist()) == {0}
    chain = [(1.0 - k / 10, k / 10) for k in range(6)]
    assert fast_nondominated_sort(chain).tolist() == list(range(6))


def test_sort_matches_brute_force():
    rng = np.random.default_rng(4)
    for trial in range(100):
        n = int(rng.integers(1, 501)) if trial % 10 == 0 else int(rng.integers(1, 80))
        pts = np.round(rng.random((n, 2)), int(rng.integers(1, 3)))
        assert fast_nondominated_sort(pts).tolist() == brute_ranks(pts)


def test_crowding_examples():
    assert np.all(np.isinf(crowding_distance([(0.1, 0.9), (0.9, 0.1)])))
    d = crowding_distance([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
    assert d[1] == pytest.approx(2.0) and np.isinf(d[0]) and np.isinf(d[2])
    dup = crowding_distance([(0.0, 1.0), (0.5, 0.5), (0.5, 0.5), (1.0, 0.0)])
    assert dup[1] == pytest.approx(2.0) and dup[2] == 0.0


class _Fixed:
    """Stand-in generator that always draws the same pair and coin."""

    def __init__(self, i, j, coin):
        self.pair = np.array([i, j])
        self.coin = coin

    def integers(self, lo, hi, size):
        return self.pair

    def random(self):
        return self.coin


def test_tournament_rules():
    low, high = ind(0.5, 0.5, rank=0), ind(0.5, 0.5, rank=1)
    assert tournament_select([low, high], _Fixed(0, 1, 0.9)) is low
    assert tournament_select([low, high], _Fixed(1, 0, 0.1)) is low
    edge, mid = ind(0.5, 0.5, crowd=np.inf), ind(0.5, 0.5, crowd=1.2)
    assert tournament_select([edge, mid], _Fixed(1, 0, 0.1)) is edge
    assert tournament_select([edge, mid], _Fixed(0, 1, 0.9)) is edge


def test_tournament_coin_is_fair():
    a, b = ind(0.5, 0.5, crowd=1.0), ind(0.5, 0.5, crowd=1.0)
    rng = np.random.default_rng(6)
    picks = [tournament_select([a, b], rng) for _ in range(4000)]
    assert chisquare([picks.count(a), picks.count(b)]).pvalue > 0.001


def test_tournament_samples_with_replacement():
    low, high = ind(0.5, 0.5, rank=0), ind(0.5, 0.5, rank=1)
    rng = np.random.default_rng(5)
    wins = [tournament_select([low, high], rng) for _ in range(4000)]
    # high wins only when drawn twice
    assert abs(wins.count(high) / 4000 - 0.25) < 0.03


def test_survival_examples():
    pop = [ind(k / 8, k / 8, idx=k) for k in range(1, 7)]  # one front of six, exact spacing
    assign_rank_and_crowding(pop)
    kept = survival_selection(pop, 6)
    assert {p.id for p in kept} == set(range(1, 7))
    kept = survival_selection(pop, 4)
    # extremes are infinite; interior distances are all equal so input order breaks the tie
    assert {p.id for p in kept} == {1, 6, 2, 3}

    parents = [ind(0.9 - 0.1 * k, 0.1 + 0.05 * k, idx=k) for k in range(4)]
    offspring = [ind(0.2, 0.9, idx=10 + k) for k in range(4)]
    both = parents + offspring
    assign_rank_and_crowding(both)
    assert {p.id for p in survival_selection(both, 4)} == {0, 1, 2, 3}


# ---------------------------------------------------------------------------
# fitness

def _manual_cv(genome, spec, ds, gi, folds):
    w = expand_and_assign(genome, ds, gi)
    groups = gi.assign(ds)
    preds, fairs = [], []
    for tr, va in folds:
        m = fit(spec, ds.features[tr], ds.target[tr], w[tr])
        s = predict_scores(m, ds.features[va])
        pt = score_pair(ACC_DPD, ds.target[va], predict_labels(m, ds.features[va]), s, groups[va],
                        gi.n_groups)
        preds.append(pt.predictive_score)
        fairs.append(pt.fairness_score)
    return float(np.mean(preds)), float(np.mean(fairs))


def test_cv_fitness_matches_direct_evaluation(small):
    ds, gi = small
    spec = ModelSpec.logistic()
    folds = kfold_indices(ds, 10, 7)
    for sw in (equal_weights(gi), deterministic_weights(ds, gi)):
        assert cv_fitness(sw.values, spec, ds, gi, ACC_DPD, folds) == _manual_cv(sw.values, spec, ds, gi, folds)
    g = np.array([0.3, 1.2, 0.7, 1.9])
    assert cv_fitness(g, spec, ds, gi, ACC_DPD, folds) == cv_fitness(g.copy(), spec, ds, gi, ACC_DPD, folds)


def test_cv_fitness_all_folds_fail(small):
    ds, gi = small
    folds = kfold_indices(ds, 5, 0)
    assert cv_fitness(np.zeros(4), ModelSpec.logistic(), ds, gi, ACC_DPD, folds) == WORST_FITNESS


# ---------------------------------------------------------------------------
# full runs

def test_run_small_budget_archive(small):
    ds, gi = small
    cfg = GAConfig.for_budget(20, pop_size=20, seed=1)
    counter = FitCounter()
    run = run_ga(cfg, ModelSpec.logistic(), ds, gi, ACC_DPD, counter=counter)
    assert len(run.archive) == 20 and all(i.generation == 0 for i in run.archive)
    assert counter.fits == 20 * cfg.cv_folds


def test_full_run_mechanics(small):
    ds, gi = small
    cfg = GAConfig(seed=5)
    a = run_ga(cfg, ModelSpec.logistic(), ds, gi, ACC_DPD, keep_populations=True)
    assert len(a.archive) == cfg.evaluation_budget == 1000
    assert [i.id for i in a.archive] == list(range(1000))
    assert len(a.populations) == 50
    for gen in a.archive:
        assert gen.genome.min() >= 0.0 and gen.genome.max() <= 2.0
    for prev, nxt in zip(a.populations, a.populations[1:]):
        prev_pts = [p.objectives for p in prev]
        best = [p.objectives for p in nxt if p.rank == 0]
        for e, f in best:
            assert not any(q[0] >= e and q[1] <= f and (q[0] > e or q[1] < f) for q in prev_pts)
    b = run_ga(cfg, ModelSpec.logistic(), ds, gi, ACC_DPD)
    assert a.to_jsonl() == b.to_jsonl()
    back = load_archive(a.to_jsonl())
    assert [x.to_record() for x in back] == [x.to_record() for x in a.archive]


def test_stationary_without_variation():
    cfg = GAConfig(pop_size=10, max_gen=8, crossover_prob=0.0, per_gene_mutation_prob=0.0, seed=3)

    def fitness(g):
        # increasing in both objectives: no individual dominates another
        return float(g[0]) / 2.0, float(g[0]) / 2.0

    run = run_ga(cfg, fitness_fn=fitness, keep_populations=True)
    first = sorted(p.id for p in run.populations[0])
    for pop in run.populations[1:]:
        assert sorted(p.id for p in pop) == first


def test_different_seeds_differ():
    def fitness(g):
        return float(g.mean()) / 2.0, float(abs(g[0] - g[1])) / 2.0

    a = run_ga(GAConfig(pop_size=10, max_gen=3, seed=1), fitness_fn=fitness)
    b = run_ga(GAConfig(pop_size=10, max_gen=3, seed=2), fitness_fn=fitness)
    assert a.to_jsonl() != b.to_jsonl()
