"""Typed delimited-data ingestion, stratified folds, and contiguous partitioning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed input data or a schema violation."""


@dataclass(frozen=True)
class Attribute:
    """One input column: numeric when ``values`` is None, nominal otherwise."""

    name: str
    values: tuple[str, ...] | None = None

    @property
    def is_numeric(self) -> bool:
        return self.values is None


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    class_name: str
    class_labels: tuple[str, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DataError("attribute names must be unique")
        if len(self.class_labels) < 2:
            raise DataError("at least two class labels are required")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise DataError("class labels must be unique")
        for a in self.attributes:
            if a.values is not None:
                if not a.values:
                    raise DataError(f"nominal attribute {a.name!r} declares no values")
                if len(set(a.values)) != len(a.values):
                    raise DataError(f"nominal attribute {a.name!r} has duplicate values")

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def numeric_mask(self) -> np.ndarray:
        return np.array([a.is_numeric for a in self.attributes], dtype=bool)

    def numeric_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.attributes) if a.is_numeric]

    @staticmethod
    def parse(text: str) -> "Schema":
        """Parse the sidecar schema format.

        One attribute per line, ``name:numeric`` or ``name:nominal:v1|v2|...``;
        the final line declares the class labels as ``class:l1|l2|...``.
        """
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise DataError("schema file is empty")
        attrs: list[Attribute] = []
        class_labels: tuple[str, ...] | None = None
        for ln in lines:
            parts = ln.split(":")
            if parts[0] == "class":
                if class_labels is not None:
                    raise DataError("schema declares the class line twice")
                if len(parts) != 2 or not parts[1]:
                    raise DataError(f"bad class line: {ln!r}")
                class_labels = tuple(parts[1].split("|"))
                continue
            if class_labels is not None:
                raise DataError("the class line must be last in the schema file")
            if len(parts) == 2 and parts[1] == "numeric":
                attrs.append(Attribute(parts[0]))
            elif len(parts) == 3 and parts[1] == "nominal" and parts[2]:
                attrs.append(Attribute(parts[0], tuple(parts[2].split("|"))))
            else:
                raise DataError(f"bad schema line: {ln!r}")
        if class_labels is None:
            raise DataError("schema file has no class line")
        return Schema(tuple(attrs), "class", class_labels)

    @staticmethod
    def load(path: str | Path) -> "Schema":
        return Schema.parse(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        lines = []
        for a in self.attributes:
            if a.is_numeric:
                lines.append(f"{a.name}:numeric")
            else:
                lines.append(f"{a.name}:nominal:" + "|".join(a.values))
        lines.append("class:" + "|".join(self.class_labels))
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Dataset:
    """In-memory labeled examples.

    Numeric columns hold raw reals; nominal columns hold the index of the
    value within the attribute's declared list, so the matrix stays one
    float64 block and equality on nominals is exact.
    """

    schema: Schema
    values: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] != self.schema.n_attributes:
            raise DataError("value matrix width does not match the schema")
        if labels.shape != (values.shape[0],):
            raise DataError("labels do not align with the value matrix")
        if labels.size and (labels.min() < 0 or labels.max() >= self.schema.n_classes):
            raise DataError("label index out of range")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.schema, self.values[idx], self.labels[idx])


@dataclass(frozen=True)
class Partition:
    """A contiguous slice of a dataset, handed to one partition task."""

    index: int
    start: int
    stop: int
    values: np.ndarray
    labels: np.ndarray

    @property
    def n(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class PartitionedDataset:
    dataset: Dataset
    bounds: tuple[int, ...]

    @property
    def n_partitions(self) -> int:
        return len(self.bounds) - 1

    def parts(self) -> tuple[Partition, ...]:
        ds = self.dataset
        return tuple(
            Partition(p, self.bounds[p], self.bounds[p + 1],
                      ds.values[self.bounds[p]:self.bounds[p + 1]],
                      ds.labels[self.bounds[p]:self.bounds[p + 1]])
            for p in range(self.n_partitions)
        )


def load_csv(path: str | Path, schema: Schema, delimiter: str = ",",
             header: bool = False, allow_empty: bool = False,
             require_labels: bool = True) -> Dataset:
    """Load delimited rows against a schema.

    Row order is preserved exactly as on disk. The class label is the last
    field of each row; with ``require_labels=False`` label-less rows are
    accepted too (labels default to class 0, for prediction-only input).
    Errors name the offending 1-based line and attribute.
    """
    nominal_maps = {
        i: {v: j for j, v in enumerate(a.values)}
        for i, a in enumerate(schema.attributes) if not a.is_numeric
    }
    label_map = {v: j for j, v in enumerate(schema.class_labels)}
    width = schema.n_attributes + 1
    rows: list[list[float]] = []
    labels: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row:
                continue
            if len(row) != width and not (not require_labels and len(row) == width - 1):
                raise DataError(f"line {lineno}: expected {width} fields, got {len(row)}")
            parsed = []
            for j, attr in enumerate(schema.attributes):
                cell = row[j].strip()
                if attr.is_numeric:
                    try:
                        x = float(cell)
                    except ValueError:
                        raise DataError(
                            f"line {lineno}, attribute {j + 1} ({attr.name}): "
                            f"not a number: {cell!r}") from None
                    if not math.isfinite(x):
                        raise DataError(
                            f"line {lineno}, attribute {j + 1} ({attr.name}): "
                            f"non-finite value {cell!r}")
                else:
                    code = nominal_maps[j].get(cell)
                    if code is None:
                        raise DataError(
                            f"line {lineno}, attribute {j + 1} ({attr.name}): "
                            f"unknown nominal value {cell!r}")
                    x = float(code)
                parsed.append(x)
            if len(row) == width:
                cls = row[-1].strip()
                if cls not in label_map:
                    raise DataError(f"line {lineno}: unknown class label {cls!r}")
                labels.append(label_map[cls])
            else:
                labels.append(0)
            rows.append(parsed)
    if not rows and not allow_empty:
        raise DataError(f"{path}: no examples")
    values = np.array(rows, dtype=np.float64) if rows else np.empty((0, schema.n_attributes))
    return Dataset(schema, values, np.array(labels, dtype=np.int64))


def write_csv(dataset: Dataset, path: str | Path, delimiter: str = ",",
              header: bool = False) -> None:
    """Write a dataset back out; numeric values use shortest exact decimals."""
    schema = dataset.schema
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        if header:
            writer.writerow([a.name for a in schema.attributes] + [schema.class_name])
        for i in range(dataset.n):
            row = []
            for j, attr in enumerate(schema.attributes):
                x = dataset.values[i, j]
                row.append(repr(float(x)) if attr.is_numeric else attr.values[int(x)])
            row.append(schema.class_labels[int(dataset.labels[i])])
            writer.writerow(row)


def check_class_counts_for_kfold(dataset: Dataset, k: int) -> None:
    """Raise when any class has fewer than k examples (such classes would
    miss some test folds entirely)."""
    counts = np.bincount(dataset.labels, minlength=dataset.schema.n_classes)
    for m, c in enumerate(counts):
        if c < k:
            raise DataError(
                f"class {dataset.schema.class_labels[m]!r} has {int(c)} examples, "
                f"fewer than k={k}")


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per class, shuffle with a seeded generator and deal round-robin into k folds.

    Per-class test counts across folds differ by at most one, and the output
    is a pure function of (dataset order, k, seed). Classes smaller than k
    are dealt as far as they go; some folds then hold none of them.
    """
    if k < 2:
        raise DataError("k must be at least 2")
    if k > dataset.n:
        raise DataError(f"k={k} exceeds the number of examples ({dataset.n})")
    labels = dataset.labels
    rng = np.random.default_rng(seed)
    test_folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    for m in range(dataset.schema.n_classes):
        idx = np.flatnonzero(labels == m)
        perm = rng.permutation(idx)
        for f in range(k):
            test_folds[f].append(perm[f::k])
    all_idx = np.arange(dataset.n)
    out = []
    for f in range(k):
        test = np.sort(np.concatenate(test_folds[f]))
        train = np.setdiff1d(all_idx, test, assume_unique=True)
        out.append((train, test))
    return out


def partition(dataset: Dataset, n: int) -> PartitionedDataset:
    """Split into n contiguous index ranges of size ceil(N/n) or floor(N/n)."""
    if n < 1:
        raise DataError("partition count must be >= 1")
    if n > dataset.n:
        raise DataError(f"cannot split {dataset.n} examples into {n} partitions")
    base, rem = divmod(dataset.n, n)
    bounds = [0]
    for p in range(n):
        bounds.append(bounds[-1] + base + (1 if p < rem else 0))
    return PartitionedDataset(dataset, tuple(bounds))
