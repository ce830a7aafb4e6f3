"""Slot-level sample weights and their expansion to rows."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, GroupIndex
from .errors import SlotMismatch


@dataclass(frozen=True, eq=False)
class SlotWeights:
    values: np.ndarray
    group_index: GroupIndex

    def __post_init__(self):
        if self.values.shape != (self.group_index.n_slots,):
            raise SlotMismatch(
                f"{self.values.shape[0]} weights for {self.group_index.n_slots} slots")

    def to_dict(self, code_books=None) -> dict:
        """JSON-ready form; ``code_books`` adds the raw sensitive values of each group."""
        gi = self.group_index
        inverse = None
        if code_books is not None:
            inverse = [{code: raw for raw, code in book.items()} for book in code_books]
        slots = []
        for g in range(gi.n_groups):
            codes = [int(c) for c in gi.group_codes[g]]
            for cls in (0, 1):
                entry = {"group": codes, "class": cls,
                         "weight": float(self.values[2 * g + cls])}
                if inverse is not None:
                    entry["values"] = [inverse[j].get(c) for j, c in enumerate(codes)]
                slots.append(entry)
        return {"slots": slots}

    def to_json(self, code_books=None) -> str:
        return json.dumps(self.to_dict(code_books), indent=2)


def deterministic_weights(ds: Dataset, gi: GroupIndex) -> SlotWeights:
    """Kamiran-Calders weights ``P(group) * P(class) / P(group, class)``.

    Computed from the rows of ``ds`` (pass the training partition). Slots
    that no row occupies get weight 1.0.
    """
    n = ds.n_rows
    groups = gi.assign(ds)
    joint = np.bincount(2 * groups + ds.target, minlength=gi.n_slots).astype(np.float64)
    group_count = joint[0::2] + joint[1::2]
    class_count = np.array([n - ds.target.sum(), ds.target.sum()], dtype=np.float64)
    values = np.ones(gi.n_slots)
    for g in range(gi.n_groups):
        for c in (0, 1):
            s = 2 * g + c
            if joint[s] > 0:
                # one rounding step on integer counts: 7*6 / (5*10) gives exactly 0.84
                values[s] = (group_count[g] * class_count[c]) / (joint[s] * n)
    return SlotWeights(values, gi)


def equal_weights(gi: GroupIndex) -> SlotWeights:
    return SlotWeights(np.ones(gi.n_slots), gi)


def expand_and_assign(sw: SlotWeights | np.ndarray, ds: Dataset, gi: GroupIndex) -> np.ndarray:
    """Per-row weights: each row takes the weight of its (group, class) slot."""
    values = sw.values if isinstance(sw, SlotWeights) else np.asarray(sw, dtype=np.float64)
    if values.shape[0] != gi.n_slots:
        raise SlotMismatch(f"{values.shape[0]} weights for {gi.n_slots} slots")
    return values[gi.slots_for(ds)]
