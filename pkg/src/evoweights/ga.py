"""NSGA-II style evolution of slot-weight genomes.

Objectives are a predictive score (maximized) and a fairness score
(minimized), both cross-validated on the training partition. Every
evaluated genome is kept in an archive, which is what the harness later
retrains and scores on held-out data.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .dataset import Dataset, GroupIndex, kfold_indices
from .errors import ConfigError, LengthMismatch, MetricError, ModelError
from .metrics import MetricPair, Predictive, predict_labels, score_pair
from .model import FitCounter, ModelSpec, fit, predict_scores

WORST_FITNESS = (0.0, 1.0)


@dataclass(eq=False)
class Individual:
    genome: np.ndarray
    id: int = -1
    generation: int = 0
    predictive_fitness: float = float("nan")
    fairness_fitness: float = float("nan")
    rank: int = -1
    crowding: float = 0.0

    @property
    def evaluated(self) -> bool:
        return not np.isnan(self.predictive_fitness)

    @property
    def objectives(self) -> tuple[float, float]:
        return self.predictive_fitness, self.fairness_fitness

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "generation": self.generation,
            "genome": [float(g) for g in self.genome],
            "cv_predictive": float(self.predictive_fitness),
            "cv_fairness": float(self.fairness_fitness),
        }


@dataclass(frozen=True)
class GAConfig:
    pop_size: int = 20
    max_gen: int = 50
    ind_size: int = 4
    crossover_prob: float = 0.8
    per_gene_mutation_prob: float = 0.1
    mutation_sigma: float = 1.0
    genome_bounds: tuple[float, float] = (0.0, 2.0)
    cv_folds: int = 10
    seed: int = 0
    evaluation_budget: int | None = None

    def __post_init__(self):
        if self.evaluation_budget is None:
            object.__setattr__(self, "evaluation_budget", self.pop_size * self.max_gen)
        if self.pop_size < 2 or self.max_gen < 1 or self.ind_size < 1:
            raise ConfigError("pop_size >= 2, max_gen >= 1 and ind_size >= 1 are required")
        for name in ("crossover_prob", "per_gene_mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.mutation_sigma < 0:
            raise ConfigError("mutation_sigma must be nonnegative")
        lo, hi = self.genome_bounds
        if not lo < hi:
            raise ConfigError("genome_bounds must be increasing")
        if self.evaluation_budget != self.pop_size * self.max_gen:
            raise ConfigError(
                f"evaluation_budget ({self.evaluation_budget}) must equal "
                f"pop_size * max_gen ({self.pop_size * self.max_gen})")

    @classmethod
    def for_budget(cls, budget: int, pop_size: int = 20, **kwargs) -> "GAConfig":
        if budget % pop_size:
            raise ConfigError(f"budget {budget} is not a multiple of pop_size {pop_size}")
        return cls(pop_size=pop_size, max_gen=budget // pop_size, evaluation_budget=budget, **kwargs)


# ---------------------------------------------------------------------------
# variation operators


def initialize_pop(cfg: GAConfig, rng: np.random.Generator, first_id: int = 0) -> list[Individual]:
    lo, hi = cfg.genome_bounds
    genomes = rng.uniform(lo, hi, size=(cfg.pop_size, cfg.ind_size))
    return [Individual(genome=g, id=first_id + i, generation=0) for i, g in enumerate(genomes)]


def _genome(x) -> np.ndarray:
    return x.genome if isinstance(x, Individual) else np.asarray(x, dtype=np.float64)


def crossover(a, b, rng: np.random.Generator, p: float = 0.8) -> np.ndarray:
    """Uniform crossover with probability ``p``; otherwise a copy of ``a``."""
    ga_, gb = _genome(a), _genome(b)
    if ga_.shape != gb.shape:
        raise LengthMismatch("parents have different genome lengths")
    if rng.random() < p:
        take_a = rng.random(ga_.shape[0]) < 0.5
        return np.where(take_a, ga_, gb)
    return ga_.copy()


def mutate(genome, rng: np.random.Generator, per_gene_p: float = 0.1, sigma: float = 1.0,
           bounds: tuple[float, float] = (0.0, 2.0)) -> np.ndarray:
    """Gaussian point mutation per gene with probability ``per_gene_p``, clamped to ``bounds``."""
    g = _genome(genome)
    hit = rng.random(g.shape[0]) < per_gene_p
    noise = rng.normal(0.0, sigma, size=g.shape[0])
    return np.clip(np.where(hit, g + noise, g), bounds[0], bounds[1])


# ---------------------------------------------------------------------------
# nondominated scoring


def fast_nondominated_sort(points: Sequence[tuple[float, float]]) -> np.ndarray:
    """Pareto ranks for (predictive, fairness) pairs; predictive maximized, fairness minimized."""
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return kernels.nondominated_ranks(np.column_stack([-arr[:, 0], arr[:, 1]]))


def crowding_distance(front) -> np.ndarray:
    """Deb's crowding distance within one front.

    Extremes get ``inf``. Repeated objective vectors are scored once: the
    first occurrence gets the distance, later copies get 0.
    """
    arr = np.asarray(front, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 2)
    n, m = arr.shape
    dist = np.zeros(n)
    if n == 0:
        return dist
    seen: dict[tuple, int] = {}
    first = []
    for i, row in enumerate(map(tuple, arr)):
        if row not in seen:
            seen[row] = i
            first.append(i)
    first = np.asarray(first)
    uniq = arr[first]
    ud = np.zeros(first.size)
    if first.size <= 2:
        ud[:] = np.inf
    else:
        for k in range(m):
            order = np.argsort(uniq[:, k], kind="stable")
            col = uniq[order, k]
            span = col[-1] - col[0]
            ud[order[0]] = ud[order[-1]] = np.inf
            if span > 0:
                ud[order[1:-1]] += (col[2:] - col[:-2]) / span
    dist[first] = ud
    return dist


def assign_rank_and_crowding(pop: Sequence[Individual]) -> None:
    ranks = fast_nondominated_sort([ind.objectives for ind in pop])
    for ind, r in zip(pop, ranks):
        ind.rank = int(r)
    for r in np.unique(ranks):
        members = [ind for ind in pop if ind.rank == r]
        cd = crowding_distance([ind.objectives for ind in members])
        for ind, c in zip(members, cd):
            ind.crowding = float(c)


def tournament_select(pop: Sequence[Individual], rng: np.random.Generator) -> Individual:
    """Binary tournament: lower rank wins, then larger crowding, then a coin flip."""
    i, j = rng.integers(0, len(pop), size=2)
    a, b = pop[i], pop[j]
    coin = rng.random()
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if coin < 0.5 else b


def survival_selection(combined: Sequence[Individual], pop_size: int) -> list[Individual]:
    """Keep ``pop_size`` individuals by ascending rank, then descending crowding.

    Ranks and crowding must already be computed over ``combined``. Ties keep
    the input order, so parents listed first win against identical offspring.
    """
    order = sorted(range(len(combined)), key=lambda i: (combined[i].rank, -combined[i].crowding, i))
    return [combined[i] for i in order[:pop_size]]


# ---------------------------------------------------------------------------
# fitness


def cv_fitness(genome, spec: ModelSpec, train: Dataset, gi: GroupIndex, pair: MetricPair,
               folds: Sequence[tuple[np.ndarray, np.ndarray]],
               counter: FitCounter | None = None) -> tuple[float, float]:
    """Mean validation (predictive, fairness) over ``folds``.

    A fold is skipped when the model cannot be trained on it or a metric is
    undefined on its validation rows (e.g. AUROC with one class). With every
    fold skipped the genome gets the worst possible fitness.
    """
    genome = np.asarray(genome, dtype=np.float64)
    row_weights = genome[gi.slots_for(train)]
    groups = gi.assign(train)
    preds, fairs = [], []
    for tr, va in folds:
        y_va = train.target[va]
        if pair.predictive is Predictive.ROC and np.unique(y_va).size < 2:
            continue
        try:
            model = fit(spec, train.features[tr], train.target[tr], row_weights[tr], counter)
            scores = predict_scores(model, train.features[va])
            point = score_pair(pair, y_va, predict_labels(scores), scores, groups[va], gi.n_groups)
        except (ModelError, MetricError):
            continue
        preds.append(point.predictive_score)
        fairs.append(point.fairness_score)
    if not preds:
        return WORST_FITNESS
    return float(np.mean(preds)), float(np.mean(fairs))


FitnessFn = Callable[[np.ndarray], tuple[float, float]]


def evaluate(pop: Iterable[Individual], spec: ModelSpec | None = None, train: Dataset | None = None,
             gi: GroupIndex | None = None, pair: MetricPair | None = None, cfg: GAConfig | None = None,
             *, folds=None, archive: list | None = None, counter: FitCounter | None = None,
             fitness_fn: FitnessFn | None = None) -> list[Individual]:
    """Attach CV fitness to every individual and append each one to ``archive``."""
    pop = list(pop)
    if fitness_fn is None:
        if folds is None:
            folds = kfold_indices(train, cfg.cv_folds, cfg.seed)

        def fitness_fn(genome):
            return cv_fitness(genome, spec, train, gi, pair, folds, counter)

    for ind in pop:
        ind.predictive_fitness, ind.fairness_fitness = fitness_fn(ind.genome)
        if archive is not None:
            archive.append(ind)
    return pop


# ---------------------------------------------------------------------------
# main loop


@dataclass
class GARun:
    archive: list[Individual] = field(default_factory=list)
    populations: list[list[Individual]] = field(default_factory=list)
    fits: int = 0

    def to_jsonl(self) -> str:
        return "".join(json.dumps(ind.to_record()) + "\n" for ind in self.archive)


def run_ga(cfg: GAConfig, spec: ModelSpec | None = None, train: Dataset | None = None,
           gi: GroupIndex | None = None, pair: MetricPair | None = None, *,
           counter: FitCounter | None = None, fitness_fn: FitnessFn | None = None,
           keep_populations: bool = False) -> GARun:
    """Evolve slot weights until ``cfg.evaluation_budget`` genomes have been evaluated.

    The initial population counts against the budget, so ``max_gen``
    generations means one random population plus ``max_gen - 1`` rounds of
    offspring. Returns every evaluated individual in evaluation order.

    ``fitness_fn`` replaces cross-validated model fitness; it exists for
    tests of the evolutionary machinery.
    """
    if fitness_fn is None and (train is None or gi is None or pair is None or spec is None):
        raise ConfigError("run_ga needs spec, train, gi and pair unless fitness_fn is given")
    if gi is not None and gi.n_slots != cfg.ind_size:
        raise ConfigError(f"ind_size {cfg.ind_size} does not match {gi.n_slots} weight slots")
    counter = counter or FitCounter()
    root = np.random.SeedSequence(cfg.seed)
    init_seq, fold_seq, ops_seq = root.spawn(3)
    gen_seqs = ops_seq.spawn(cfg.max_gen)

    folds = None
    if fitness_fn is None:
        folds = kfold_indices(train, cfg.cv_folds, int(fold_seq.generate_state(1)[0]))

    run = GARun()

    def _evaluate(individuals):
        evaluate(individuals, spec, train, gi, pair, cfg, folds=folds, archive=run.archive,
                 counter=counter, fitness_fn=fitness_fn)

    pop = initialize_pop(cfg, np.random.default_rng(init_seq))
    _evaluate(pop)
    assign_rank_and_crowding(pop)
    if keep_populations:
        run.populations.append(list(pop))

    lo_hi = cfg.genome_bounds
    gen = 1
    while len(run.archive) + cfg.pop_size <= cfg.evaluation_budget:
        rng = np.random.default_rng(gen_seqs[gen])
        offspring = []
        for _ in range(cfg.pop_size):
            parent_a = tournament_select(pop, rng)
            parent_b = tournament_select(pop, rng)
            child = crossover(parent_a, parent_b, rng, cfg.crossover_prob)
            child = mutate(child, rng, cfg.per_gene_mutation_prob, cfg.mutation_sigma, lo_hi)
            offspring.append(Individual(genome=child, id=len(run.archive) + len(offspring),
                                        generation=gen))
        _evaluate(offspring)
        combined = pop + offspring
        assign_rank_and_crowding(combined)
        pop = survival_selection(combined, cfg.pop_size)
        if keep_populations:
            run.populations.append(list(pop))
        gen += 1

    run.fits = counter.fits
    return run


def load_archive(text: str) -> list[Individual]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        out.append(Individual(genome=np.asarray(rec["genome"]), id=rec["id"], generation=rec["generation"],
                              predictive_fitness=rec["cv_predictive"], fairness_fitness=rec["cv_fairness"]))
    return out

