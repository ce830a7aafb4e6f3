"""Two-objective Pareto fronts (both minimized) and their hypervolume."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptyInput

REFERENCE = (1.0, 1.0)


@dataclass(frozen=True)
class MinPoint:
    e: float
    f: float

    @classmethod
    def from_scores(cls, predictive: float, fairness: float) -> "MinPoint":
        return cls(1.0 - predictive, fairness)


@dataclass(frozen=True, eq=False)
class ParetoFront:
    """Nondominated points sorted by ``e`` ascending (so ``f`` strictly descending)."""

    points: np.ndarray  # shape (n, 2): columns e, f

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return (MinPoint(float(e), float(f)) for e, f in self.points)


def _as_array(points) -> np.ndarray:
    if isinstance(points, ParetoFront):
        return points.points
    if isinstance(points, np.ndarray):
        arr = points.astype(np.float64, copy=False)
    else:
        arr = np.array([(p.e, p.f) if isinstance(p, MinPoint) else tuple(p) for p in points],
                       dtype=np.float64)
    return arr.reshape(-1, 2)


def pareto_front(points: Iterable[MinPoint] | np.ndarray) -> ParetoFront:
    """Nondominated, deduplicated subset of ``points``.

    Among points sharing an ``e`` value only the lowest ``f`` survives.
    """
    arr = _as_array(points)
    if arr.shape[0] == 0:
        raise EmptyInput("cannot build a front from zero points")
    if not np.all(np.isfinite(arr)):
        raise ValueError("front points must be finite")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    keep = []
    best_f = np.inf
    for i in order:
        if arr[i, 1] < best_f:
            keep.append(i)
            best_f = arr[i, 1]
    return ParetoFront(arr[keep].copy())


def hypervolume_2d(front: ParetoFront | Iterable[MinPoint] | np.ndarray,
                   ref: MinPoint | tuple[float, float] = REFERENCE) -> float:
    """Area dominated by ``front`` and bounded by ``ref``.

    Points not strictly better than ``ref`` in both coordinates are ignored.
    Input that is not already a front is reduced to one first.
    """
    ref_e, ref_f = (ref.e, ref.f) if isinstance(ref, MinPoint) else ref
    arr = _as_array(front)
    if arr.shape[0] == 0:
        return 0.0
    arr = arr[(arr[:, 0] < ref_e) & (arr[:, 1] < ref_f)]
    if arr.shape[0] == 0:
        return 0.0
    pts = pareto_front(arr).points if not isinstance(front, ParetoFront) else arr
    next_e = np.append(pts[1:, 0], ref_e)
    return float(np.sum((next_e - pts[:, 0]) * (ref_f - pts[:, 1])))
