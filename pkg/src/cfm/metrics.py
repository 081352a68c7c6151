"""Confusion matrices, classification measures, and scalability quotients."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fuzzy import NO_COVER


@dataclass
class ConfusionMatrix:
    """Row = true class, column = predicted class; uncovered predictions are
    tracked per true class and count as errors everywhere."""

    counts: np.ndarray
    no_cover: np.ndarray

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        no_cover = np.ascontiguousarray(self.no_cover, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if no_cover.shape != (counts.shape[0],):
            raise ValueError("no_cover must have one entry per class")
        if counts.min(initial=0) < 0 or no_cover.min(initial=0) < 0:
            raise ValueError("counts must be non-negative")
        self.counts = counts
        self.no_cover = no_cover

    @classmethod
    def zeros(cls, n_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((n_classes, n_classes), dtype=np.int64),
                   np.zeros(n_classes, dtype=np.int64))

    @classmethod
    def from_predictions(cls, true, predicted, n_classes: int) -> "ConfusionMatrix":
        true = np.asarray(true, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        covered = predicted != NO_COVER
        counts = np.bincount(true[covered] * n_classes + predicted[covered],
                             minlength=n_classes * n_classes).reshape(n_classes, n_classes)
        no_cover = np.bincount(true[~covered], minlength=n_classes)
        return cls(counts, no_cover)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum() + self.no_cover.sum())

    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1) + self.no_cover

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts, self.no_cover + other.no_cover)

    def true_positive_rates(self) -> np.ndarray:
        totals = self.class_totals()
        for m, t in enumerate(totals):
            if t == 0:
                raise ValueError(f"class {m} has no examples in the evaluation data")
        return np.diag(self.counts) / totals


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of correctly classified examples (uncovered count as errors)."""
    cm.true_positive_rates()
    return float(np.trace(cm.counts)) / cm.n


def acc_class(cm: ConfusionMatrix) -> float:
    """Arithmetic mean of per-class true positive rates."""
    tpr = cm.true_positive_rates()
    return math.fsum(tpr.tolist()) / cm.n_classes


def gm(cm: ConfusionMatrix) -> float:
    """Geometric mean of per-class true positive rates.

    Exactly zero when any class is fully misclassified; otherwise evaluated
    in log space for stability with many classes.
    """
    tpr = cm.true_positive_rates()
    if tpr.min() == 0.0:
        return 0.0
    return math.exp(math.fsum(math.log(t) for t in tpr.tolist()) / cm.n_classes)


@dataclass(frozen=True)
class TimingGrid:
    """Wall-clock seconds indexed by (core count, data fraction)."""

    cores: tuple[int, ...]
    fractions: tuple[float, ...]
    seconds: np.ndarray

    def __post_init__(self):
        seconds = np.ascontiguousarray(self.seconds, dtype=np.float64)
        if seconds.shape != (len(self.cores), len(self.fractions)):
            raise ValueError("seconds grid does not match the axes")
        if seconds.size and seconds.min() <= 0:
            raise ValueError("runtimes must be positive")
        object.__setattr__(self, "seconds", seconds)

    def runtime(self, cores: int, fraction: float) -> float:
        try:
            ci = self.cores.index(cores)
        except ValueError:
            raise ValueError(f"no runtime recorded for {cores} cores") from None
        fi = _fraction_index(self.fractions, fraction)
        return float(self.seconds[ci, fi])


def _fraction_index(fractions: tuple[float, ...], fraction: float) -> int:
    for i, f in enumerate(fractions):
        if math.isclose(f, fraction, rel_tol=1e-9, abs_tol=1e-12):
            return i
    raise ValueError(f"no runtime recorded for data fraction {fraction}")


def _scaled_cores(base: int, m: float) -> int:
    target = base * m
    rounded = round(target)
    if not math.isclose(target, rounded, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(f"m={m} does not map to a whole core count")
    return int(rounded)


def speedup(grid: TimingGrid, m: float, fraction: float | None = None) -> float:
    """Runtime at the base core count over runtime at m times the cores,
    data size fixed (largest recorded fraction unless given)."""
    base_cores = min(grid.cores)
    if fraction is None:
        fraction = max(grid.fractions)
    return grid.runtime(base_cores, fraction) / grid.runtime(_scaled_cores(base_cores, m), fraction)


def sizeup(grid: TimingGrid, m: float, cores: int | None = None) -> float:
    """Runtime for m times the data over the base runtime, cores fixed
    (smallest recorded core count unless given)."""
    if cores is None:
        cores = min(grid.cores)
    base_fraction = min(grid.fractions)
    return grid.runtime(cores, base_fraction * m) / grid.runtime(cores, base_fraction)


def scaleup(grid: TimingGrid, m: float) -> float:
    """Base runtime over the runtime of an m-times job on an m-times system."""
    base_cores = min(grid.cores)
    base_fraction = min(grid.fractions)
    return grid.runtime(base_cores, base_fraction) / grid.runtime(
        _scaled_cores(base_cores, m), base_fraction * m)
