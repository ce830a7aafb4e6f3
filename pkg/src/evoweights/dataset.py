"""Tabular data ingestion, sensitive-group indexing and seeded partitioning."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    MissingColumn,
    MissingValue,
    NonBinaryTarget,
    SchemaError,
    TooFewRows,
)


@dataclass(frozen=True)
class DatasetSchema:
    """Which CSV columns are the target, the sensitive attributes and the features.

    When ``feature_columns`` is None every non-target column is used as a
    feature, sensitive columns included.
    """

    target_column: str
    favorable_label: str
    sensitive_columns: tuple[str, ...]
    feature_columns: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "favorable_label", str(self.favorable_label))
        object.__setattr__(self, "sensitive_columns", tuple(self.sensitive_columns))
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if not self.sensitive_columns:
            raise SchemaError("sensitive_columns must name at least one column")
        if len(set(self.sensitive_columns)) != len(self.sensitive_columns):
            raise SchemaError("sensitive_columns contains duplicates")
        if self.target_column in self.sensitive_columns:
            raise SchemaError("target column cannot also be sensitive")
        if self.feature_columns is not None:
            if self.target_column in self.feature_columns:
                raise SchemaError("target column cannot also be a feature")
            if len(set(self.feature_columns)) != len(self.feature_columns):
                raise SchemaError("feature_columns contains duplicates")

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetSchema":
        try:
            return cls(
                target_column=doc["target_column"],
                favorable_label=str(doc["favorable_label"]),
                sensitive_columns=tuple(doc["sensitive_columns"]),
                feature_columns=tuple(doc["feature_columns"]) if doc.get("feature_columns") is not None else None,
            )
        except KeyError as exc:
            raise SchemaError(f"schema is missing key {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, path: str | Path) -> "DatasetSchema":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read schema {path}: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {
            "target_column": self.target_column,
            "favorable_label": self.favorable_label,
            "sensitive_columns": list(self.sensitive_columns),
        }
        if self.feature_columns is not None:
            doc["feature_columns"] = list(self.feature_columns)
        return doc


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    sensitive: np.ndarray
    code_books: tuple[dict, ...]
    feature_names: tuple[str, ...] = ()
    sensitive_names: tuple[str, ...] = ()
    name: str = "dataset"

    def __post_init__(self):
        n = self.features.shape[0]
        if self.target.shape[0] != n or self.sensitive.shape[0] != n:
            raise ValueError("features, target and sensitive must have the same number of rows")

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            features=self.features[rows],
            target=self.target[rows],
            sensitive=self.sensitive[rows],
            code_books=self.code_books,
            feature_names=self.feature_names,
            sensitive_names=self.sensitive_names,
            name=self.name,
        )

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.target.sum())
        return self.n_rows - n1, n1


def _parse_float(text: str):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _encode_column(values: list[str]) -> tuple[np.ndarray, dict | None]:
    parsed = [_parse_float(v) for v in values]
    if all(p is not None for p in parsed):
        return np.asarray(parsed, dtype=np.float64), None
    book: dict[str, int] = {}
    codes = [book.setdefault(v, len(book)) for v in values]
    return np.asarray(codes, dtype=np.float64), book


def load_csv(path: str | Path, schema: DatasetSchema, name: str | None = None) -> Dataset:
    """Read a headered UTF-8 CSV into a :class:`Dataset`.

    Non-numeric feature columns and all sensitive columns are integer coded
    in first-seen order. Empty cells are an error.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path} is empty") from None
        records = [row for row in reader if row]

    position = {col: i for i, col in enumerate(header)}
    feature_columns = schema.feature_columns
    if feature_columns is None:
        feature_columns = tuple(c for c in header if c != schema.target_column)
    wanted = (schema.target_column, *schema.sensitive_columns, *feature_columns)
    for col in wanted:
        if col not in position:
            raise MissingColumn(f"column {col!r} not found in {path.name}")

    columns: dict[str, list[str]] = {col: [] for col in dict.fromkeys(wanted)}
    for line_no, row in enumerate(records, start=2):
        if len(row) != len(header):
            raise MissingValue(f"line {line_no}: expected {len(header)} cells, got {len(row)}")
        for col in columns:
            cell = row[position[col]].strip()
            if cell == "":
                raise MissingValue(f"line {line_no}: empty cell in column {col!r}")
            columns[col].append(cell)

    raw_target = columns[schema.target_column]
    distinct = list(dict.fromkeys(raw_target))
    if len(distinct) > 2:
        raise NonBinaryTarget(f"target {schema.target_column!r} has {len(distinct)} distinct values")
    fav = schema.favorable_label
    fav_num = _parse_float(fav)

    def is_favorable(v: str) -> bool:
        if v == fav:
            return True
        num = _parse_float(v)
        return fav_num is not None and num is not None and num == fav_num

    target = np.asarray([1 if is_favorable(v) else 0 for v in raw_target], dtype=np.int64)
    if len(distinct) == 2 and not any(is_favorable(v) for v in distinct):
        raise NonBinaryTarget(f"favorable label {fav!r} does not occur in target column")

    sensitive = np.empty((len(raw_target), len(schema.sensitive_columns)), dtype=np.int64)
    books = []
    for j, col in enumerate(schema.sensitive_columns):
        book: dict[str, int] = {}
        sensitive[:, j] = [book.setdefault(v, len(book)) for v in columns[col]]
        books.append(book)

    feats = np.empty((len(raw_target), len(feature_columns)), dtype=np.float64)
    for j, col in enumerate(feature_columns):
        feats[:, j], _ = _encode_column(columns[col])

    return Dataset(
        features=feats,
        target=target,
        sensitive=sensitive,
        code_books=tuple(books),
        feature_names=tuple(feature_columns),
        sensitive_names=tuple(schema.sensitive_columns),
        name=name or path.stem,
    )


@dataclass(frozen=True, eq=False)
class GroupIndex:
    """Enumerates sensitive-value combinations and their (group, class) slots.

    Groups are the Cartesian product of each sensitive column's code set, in
    lexicographic order with the first sensitive column most significant.
    Slot ``2 * g + c`` holds the weight of group ``g`` and class ``c``.
    """

    group_of_row: np.ndarray
    n_groups: int
    level_counts: tuple[int, ...]
    group_codes: np.ndarray = field(repr=False)

    @property
    def n_slots(self) -> int:
        return 2 * self.n_groups

    def slot_of(self, group, cls):
        return 2 * np.asarray(group) + np.asarray(cls)

    def assign(self, ds: Dataset) -> np.ndarray:
        """Group id of every row of ``ds`` (which must share this index's code books)."""
        return _group_ids(ds.sensitive, self.level_counts)

    def slots_for(self, ds: Dataset) -> np.ndarray:
        return 2 * self.assign(ds) + ds.target


def _group_ids(sensitive: np.ndarray, level_counts: Sequence[int]) -> np.ndarray:
    gid = np.zeros(sensitive.shape[0], dtype=np.int64)
    for j, size in enumerate(level_counts):
        gid = gid * size + sensitive[:, j]
    return gid


def build_group_index(ds: Dataset) -> GroupIndex:
    level_counts = tuple(max(len(book), 1) for book in ds.code_books)
    n_groups = int(np.prod(level_counts)) if level_counts else 1
    grids = np.meshgrid(*[np.arange(c) for c in level_counts], indexing="ij")
    codes = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    return GroupIndex(
        group_of_row=_group_ids(ds.sensitive, level_counts),
        n_groups=n_groups,
        level_counts=level_counts,
        group_codes=codes,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def train_test_split_indices(ds: Dataset, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    if ds.n_rows < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {ds.n_rows}")
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for cls in (0, 1):
        rows = np.flatnonzero(ds.target == cls)
        n_test = _round_half_up(test_fraction * rows.size)
        if n_test == 0 or n_test == rows.size:
            raise DegenerateSplit(f"class {cls} ({rows.size} rows) cannot populate both parts")
        rows = rng.permutation(rows)
        test_parts.append(rows[:n_test])
        train_parts.append(rows[n_test:])
    train = rng.permutation(np.concatenate(train_parts))
    test = rng.permutation(np.concatenate(test_parts))
    return train, test


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified (by target) seeded split into ``(train, test)``."""
    train, test = train_test_split_indices(ds, test_fraction, seed)
    return ds.take(train), ds.take(test)


def kfold_indices(ds: Dataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    if k < 2:
        raise ValueError("k must be at least 2")
    n0, n1 = ds.class_counts()
    if min(n0, n1) < k:
        raise TooFewRows(f"each class needs at least {k} rows for {k}-fold CV (have {n0}/{n1})")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(ds.target == c)) for c in (0, 1)])
    fold_of = np.empty(ds.n_rows, dtype=np.int64)
    fold_of[order] = np.arange(order.size) % k
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]


def kfold(ds: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Stratified k-fold partition as ``[(train_part, validation_part), ...]``."""
    return [(ds.take(tr), ds.take(va)) for tr, va in kfold_indices(ds, k, seed)]


def undersample_indices(ds: Dataset, seed: int) -> np.ndarray:
    n0, n1 = ds.class_counts()
    if n0 == 0 or n1 == 0:
        raise DegenerateSplit("undersampling needs both classes")
    majority = 0 if n0 > n1 else 1
    minority_rows = np.flatnonzero(ds.target != majority)
    majority_rows = np.flatnonzero(ds.target == majority)
    rng = np.random.default_rng(seed)
    keep = rng.choice(majority_rows, size=minority_rows.size, replace=False)
    return np.sort(np.concatenate([minority_rows, keep]))


def undersample(ds: Dataset, seed: int) -> Dataset:
    """Randomly drop majority-class rows until both classes are the same size."""
    return ds.take(undersample_indices(ds, seed))


def make_biased_dataset(
    n_rows: int = 600,
    flip_rate: float = 0.2,
    protected_fraction: float = 0.4,
    seed: int = 0,
) -> Dataset:
    """Synthetic benchmark with one binary sensitive attribute and injected label bias.

    Clean labels come from a noisy linear rule on three numeric features.
    A ``flip_rate`` share of the protected group's positive labels is then
    flipped to 0, so a model fit to the observed labels inherits the bias.
    One feature is correlated with group membership, and the sensitive
    attribute is itself a feature.
    """
    rng = np.random.default_rng(seed)
    group = (rng.random(n_rows) < protected_fraction).astype(np.int64)
    x1 = rng.normal(size=n_rows)
    x2 = rng.normal(size=n_rows)
    proxy = rng.normal(size=n_rows) + 0.8 * group
    logit = 1.2 * x1 - 0.8 * x2 + 0.3 * proxy + 0.2
    y = (logit + rng.logistic(scale=0.5, size=n_rows) > 0).astype(np.int64)
    flip = (group == 1) & (y == 1) & (rng.random(n_rows) < flip_rate)
    y[flip] = 0
    features = np.column_stack([x1, x2, proxy, group.astype(np.float64)])
    return Dataset(
        features=features,
        target=y,
        sensitive=group[:, None],
        code_books=({"majority": 0, "protected": 1},),
        feature_names=("x1", "x2", "proxy", "group"),
        sensitive_names=("group",),
        name="synthetic_biased",
    )


def write_csv(ds: Dataset, path: str | Path, target_column: str = "label") -> DatasetSchema:
    """Write ``ds`` as CSV (sensitive columns as their raw values) and return a matching schema."""
    path = Path(path)
    inverse = [{code: raw for raw, code in book.items()} for book in ds.code_books]
    sens_names = list(ds.sensitive_names)
    feat_names = [f for f in ds.feature_names if f not in sens_names]
    feat_idx = [ds.feature_names.index(f) for f in feat_names]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*feat_names, *sens_names, target_column])
        for r in range(ds.n_rows):
            writer.writerow([
                *(repr(float(ds.features[r, j])) for j in feat_idx),
                *(inverse[j][int(ds.sensitive[r, j])] for j in range(len(sens_names))),
                int(ds.target[r]),
            ])
    return DatasetSchema(target_column=target_column, favorable_label="1", sensitive_columns=tuple(sens_names))
