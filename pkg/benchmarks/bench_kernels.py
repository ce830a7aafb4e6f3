"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once per backend (so numba compilation is not
timed) and the best of ``--repeat`` runs is reported.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from evoweights import kernels
from evoweights._accel import HAVE_NUMBA, backend_override
from evoweights.dataset import build_group_index, kfold_indices, make_biased_dataset
from evoweights.ga import cv_fitness
from evoweights.metrics import MetricPair
from evoweights.model import ModelSpec, fit
from evoweights.reweight import deterministic_weights


def cases():
    rng = np.random.default_rng(0)
    ds = make_biased_dataset(n_rows=600, seed=1)
    gi = build_group_index(ds)
    w = np.asarray(deterministic_weights(ds, gi).values)[gi.slots_for(ds)]
    obj = rng.random((400, 2))
    folds = kfold_indices(ds, 10, 0)
    pair = MetricPair.parse("acc", "dpd")
    genome = np.ones(gi.n_slots)
    logistic, forest = ModelSpec.logistic(), ModelSpec.forest(n_trees=20)
    return {
        "nondominated_ranks n=400": lambda: kernels.nondominated_ranks(obj),
        "logistic fit n=600": lambda: fit(logistic, ds.features, ds.target, w),
        "forest fit 20 trees n=600": lambda: fit(forest, ds.features, ds.target, w),
        "cv fitness 10 folds": lambda: cv_fitness(genome, logistic, ds, gi, pair, folds),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    table = {}
    for name, fn in cases().items():
        for b in backends:
            with backend_override(b):
                fn()
                best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            table[(name, b)] = best
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name in cases():
        row = f"{name:<28}" + "".join(f"{table[(name, b)] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{table[(name, 'numpy')] / table[(name, 'numba')]:>11.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
