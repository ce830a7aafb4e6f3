"""Replicated comparison of equal, deterministic and evolved weights.

Every method gets the same number of weight-vector evaluations per
replicate, and replicate ``r`` uses the same train/test split for every
method, so hypervolumes can be compared as paired samples.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import platform
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .dataset import (
    Dataset,
    DatasetSchema,
    build_group_index,
    load_csv,
    train_test_split_indices,
    undersample_indices,
)
from .errors import ConfigError, ModelError, SeedMismatch
from .ga import GAConfig, run_ga
from .metrics import MetricPair, predict_labels, score_pair
from .model import FitCounter, ModelSpec, fit, predict_scores
from .pareto import REFERENCE, ParetoFront, hypervolume_2d, pareto_front
from .reweight import deterministic_weights, equal_weights, expand_and_assign
from .stats import HypervolumeTable, StatReport, compare_methods

log = logging.getLogger(__name__)


class Method(str, Enum):
    EQ = "eq"
    DW = "dw"
    EW = "ew"


METHOD_ORDER = (Method.EQ, Method.DW, Method.EW)


def derive_seed(*words: int) -> int:
    """Stable 63-bit seed from a tuple of nonnegative integers."""
    state = np.random.SeedSequence([int(w) for w in words]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


_SPLIT, _UNDERSAMPLE, _GA, _MODEL = range(4)


def replicate_seed(master_seed: int, replicate_index: int) -> int:
    return derive_seed(master_seed, replicate_index)


def model_seed(rep_seed: int, evaluation_index: int) -> int:
    return derive_seed(rep_seed, _MODEL, evaluation_index)


@dataclass(frozen=True)
class ExperimentConfig:
    method: Method
    metric_pair: MetricPair
    data_path: str | None = None
    schema: DatasetSchema | None = None
    dataset_name: str | None = None
    replicates: int = 20
    evaluation_budget: int = 1000
    model: ModelSpec = field(default_factory=ModelSpec)
    pop_size: int = 20
    cv_folds: int = 10
    test_fraction: float = 0.25
    undersample_train: bool = False
    master_seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.replicates < 1 or self.evaluation_budget < 1:
            raise ConfigError("replicates and evaluation_budget must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.method is Method.EW and self.evaluation_budget % self.pop_size:
            raise ConfigError(f"EW budget {self.evaluation_budget} must be a multiple of "
                              f"pop_size {self.pop_size}")

    @property
    def name(self) -> str:
        if self.dataset_name:
            return self.dataset_name
        if self.data_path:
            return Path(self.data_path).stem
        return "dataset"

    def ga_config(self, ind_size: int, seed: int) -> GAConfig:
        return GAConfig.for_budget(self.evaluation_budget, pop_size=self.pop_size, ind_size=ind_size,
                                   cv_folds=self.cv_folds, seed=seed)

    def to_dict(self) -> dict:
        return {
            "dataset": self.name,
            "data_path": self.data_path,
            "schema": self.schema.to_dict() if self.schema else None,
            "method": self.method.value,
            "predictive": self.metric_pair.predictive.value,
            "fairness": self.metric_pair.fairness.value,
            "replicates": self.replicates,
            "evaluation_budget": self.evaluation_budget,
            "model": self.model.to_dict(),
            "pop_size": self.pop_size,
            "cv_folds": self.cv_folds,
            "test_fraction": self.test_fraction,
            "undersample_train": self.undersample_train,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(
            method=Method(doc["method"]),
            metric_pair=MetricPair.parse(doc["predictive"], doc["fairness"]),
            data_path=doc.get("data_path"),
            schema=DatasetSchema.from_dict(doc["schema"]) if doc.get("schema") else None,
            dataset_name=doc.get("dataset"),
            replicates=doc["replicates"],
            evaluation_budget=doc["evaluation_budget"],
            model=ModelSpec.from_dict(doc["model"]),
            pop_size=doc.get("pop_size", 20),
            cv_folds=doc.get("cv_folds", 10),
            test_fraction=doc["test_fraction"],
            undersample_train=doc["undersample_train"],
            master_seed=doc["master_seed"],
        )


@dataclass
class ReplicateResult:
    replicate: int
    seed: int
    hypervolume: float
    front: ParetoFront
    points: np.ndarray  # (budget, 2): test predictive, test fairness
    evaluations: int
    fits: int
    seconds: float = 0.0
    archive_jsonl: str | None = None


@dataclass
class RunResult:
    config: ExperimentConfig
    replicates: list[ReplicateResult]

    @property
    def hypervolumes(self) -> np.ndarray:
        return np.array([r.hypervolume for r in self.replicates])

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.replicates]


def _test_point(spec, train, test, weights, gi, pair, test_groups, counter):
    try:
        model = fit(spec, train.features, train.target, weights, counter)
    except ModelError:
        # untrainable weighting (e.g. a class zeroed out) scores as the worst corner
        return 0.0, 1.0
    scores = predict_scores(model, test.features)
    pt = score_pair(pair, test.target, predict_labels(scores), scores, test_groups, gi.n_groups)
    return pt.predictive_score, pt.fairness_score


def prepare_split(cfg: ExperimentConfig, ds: Dataset, rep_seed: int) -> tuple[Dataset, Dataset]:
    tr, te = train_test_split_indices(ds, cfg.test_fraction, derive_seed(rep_seed, _SPLIT))
    train, test = ds.take(tr), ds.take(te)
    if cfg.undersample_train:
        train = train.take(undersample_indices(train, derive_seed(rep_seed, _UNDERSAMPLE)))
    return train, test


def run_replicate(cfg: ExperimentConfig, replicate_index: int, ds: Dataset) -> ReplicateResult:
    """One replicate of one method: split, spend the evaluation budget, score fronts on test data."""
    started = time.perf_counter()
    rep_seed = replicate_seed(cfg.master_seed, replicate_index)
    train, test = prepare_split(cfg, ds, rep_seed)
    gi = build_group_index(train)
    test_groups = gi.assign(test)
    pair = cfg.metric_pair
    counter = FitCounter()
    archive_jsonl = None

    if cfg.method is Method.EW:
        fixed = cfg.model.with_seed(model_seed(rep_seed, 0))
        ga_cfg = cfg.ga_config(gi.n_slots, derive_seed(rep_seed, _GA))
        run = run_ga(ga_cfg, fixed, train, gi, pair, counter=counter)
        archive_jsonl = run.to_jsonl()
        genomes = [ind.genome for ind in run.archive]
        specs = [fixed] * len(genomes)
    else:
        slot = equal_weights(gi) if cfg.method is Method.EQ else deterministic_weights(train, gi)
        genomes = [slot.values] * cfg.evaluation_budget
        specs = [cfg.model.with_seed(model_seed(rep_seed, i)) for i in range(cfg.evaluation_budget)]

    points = np.empty((len(genomes), 2))
    for i, (genome, spec) in enumerate(zip(genomes, specs)):
        weights = expand_and_assign(genome, train, gi)
        points[i] = _test_point(spec, train, test, weights, gi, pair, test_groups, counter)

    if len(genomes) != cfg.evaluation_budget:
        raise RuntimeError(f"{cfg.method.value}: {len(genomes)} evaluations, "
                           f"budget {cfg.evaluation_budget}")
    front = pareto_front(np.column_stack([1.0 - points[:, 0], points[:, 1]]))
    return ReplicateResult(
        replicate=replicate_index,
        seed=rep_seed,
        hypervolume=hypervolume_2d(front, REFERENCE),
        front=front,
        points=points,
        evaluations=len(genomes),
        fits=counter.fits,
        seconds=time.perf_counter() - started,
        archive_jsonl=archive_jsonl,
    )


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.data_path is None or cfg.schema is None:
        raise ConfigError("a data path and schema are required")
    return load_csv(cfg.data_path, cfg.schema, name=cfg.name)


def run_experiment(cfg: ExperimentConfig, ds: Dataset | None = None, write: bool = True) -> RunResult:
    if ds is None:
        ds = load_dataset(cfg)
    reps = []
    for r in range(cfg.replicates):
        rep = run_replicate(cfg, r, ds)
        log.info("%s %s %s replicate %d: hv=%.6f (%.1fs, %d fits)", cfg.name, cfg.method.value,
                 cfg.metric_pair.slug, r, rep.hypervolume, rep.seconds, rep.fits)
        reps.append(rep)
    result = RunResult(cfg, reps)
    if write and cfg.output_dir:
        write_result(result, result_dir(cfg))
    return result


# ---------------------------------------------------------------------------
# persistence


def result_dir(cfg: ExperimentConfig, root: str | Path | None = None) -> Path:
    root = Path(root or cfg.output_dir or ".")
    return root / f"{cfg.name}__{cfg.metric_pair.slug}__{cfg.method.value}"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _front_rows(rep: ReplicateResult, method: str):
    return [(rep.replicate, method, repr(float(e)), repr(float(f))) for e, f in rep.front.points]


def write_result(result: RunResult, directory: str | Path) -> Path:
    """Write a run to ``directory``, replacing it atomically."""
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    method = cfg.method.name
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=directory.parent))
    try:
        (tmp / "fronts").mkdir()
        (tmp / "points").mkdir()
        (tmp / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        manifest = {
            "package_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "backend": backend(),
            "master_seed": cfg.master_seed,
            "replicate_seeds": result.seeds,
            "evaluations": [r.evaluations for r in result.replicates],
            "model_fits": [r.fits for r in result.replicates],
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        (tmp / "hypervolume.csv").write_text(_csv_text(
            ("method", "replicate", "hypervolume"),
            [(method, r.replicate, repr(r.hypervolume)) for r in result.replicates]))
        for rep in result.replicates:
            stem = f"replicate_{rep.replicate:03d}"
            (tmp / "fronts" / f"{stem}.csv").write_text(
                _csv_text(("replicate", "method", "e", "f"), _front_rows(rep, method)))
            (tmp / "points" / f"{stem}.csv").write_text(_csv_text(
                ("predictive", "fairness"), [(repr(float(p)), repr(float(q))) for p, q in rep.points]))
            if rep.archive_jsonl is not None:
                (tmp / "archives").mkdir(exist_ok=True)
                (tmp / "archives" / f"{stem}.jsonl").write_text(rep.archive_jsonl)
        if directory.exists():
            shutil.rmtree(directory)
        os.replace(tmp, directory)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return directory


def load_result(directory: str | Path) -> RunResult:
    """Read a run written by :func:`write_result` (fronts and hypervolumes; points skipped)."""
    directory = Path(directory)
    cfg = ExperimentConfig.from_dict(json.loads((directory / "config.json").read_text()))
    manifest = json.loads((directory / "manifest.json").read_text())
    with (directory / "hypervolume.csv").open(newline="") as fh:
        hv = {int(row["replicate"]): float(row["hypervolume"]) for row in csv.DictReader(fh)}
    reps = []
    for i, seed in enumerate(manifest["replicate_seeds"]):
        with (directory / "fronts" / f"replicate_{i:03d}.csv").open(newline="") as fh:
            pts = [(float(row["e"]), float(row["f"])) for row in csv.DictReader(fh)]
        front = ParetoFront(np.asarray(pts, dtype=np.float64).reshape(-1, 2))
        reps.append(ReplicateResult(i, seed, hv[i], front, np.empty((0, 2)),
                                    manifest["evaluations"][i], manifest["model_fits"][i]))
    return RunResult(cfg, reps)


# ---------------------------------------------------------------------------
# comparison


def _pairing_key(cfg: ExperimentConfig):
    return (cfg.name, cfg.metric_pair, cfg.master_seed, cfg.test_fraction, cfg.undersample_train,
            cfg.replicates)


def hypervolume_table(results: dict[Method, RunResult] | list[RunResult]) -> HypervolumeTable:
    if not isinstance(results, dict):
        results = {r.config.method: r for r in results}
    missing = [m for m in METHOD_ORDER if m not in results]
    if missing:
        raise ConfigError(f"missing results for {[m.name for m in missing]}")
    ordered = [results[m] for m in METHOD_ORDER]
    base = ordered[0]
    for other in ordered[1:]:
        if other.seeds != base.seeds or _pairing_key(other.config) != _pairing_key(base.config):
            raise SeedMismatch(f"{other.config.method.name} was not run on the same replicate "
                               f"splits as {base.config.method.name}")
    return HypervolumeTable(np.column_stack([r.hypervolumes for r in ordered]),
                            tuple(m.name for m in METHOD_ORDER))


def compare(results, alpha: float = 0.05) -> StatReport:
    if not isinstance(results, dict):
        results = {r.config.method: r for r in results}
    tbl = hypervolume_table(results)
    cfg = next(iter(results.values())).config
    return compare_methods(tbl, alpha, dataset=cfg.name, metric_pair=cfg.metric_pair.label)


def verify_hypervolumes(result: RunResult, tol: float = 1e-12) -> bool:
    """True if every stored hypervolume can be recomputed from its stored front."""
    return all(abs(hypervolume_2d(r.front) - r.hypervolume) <= tol for r in result.replicates)

