"""Empirical quantile CDFs, the uniform-space value mapping, and triangular
fuzzy partitions of the unit interval.

Mapping every numeric variable through its own estimated CDF makes the
transformed values approximately Uniform[0,1], so a fixed uniform fuzzy
partition fits every variable; the inverse CDF recovers set definitions in
the original units for reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class QuantileTable:
    """Per numeric variable, the sorted q-quantiles estimated from training data.

    For variable v, ``quantiles[v]`` holds Q_1..Q_{q-1} (length q-1), where
    Q_i is the sorted training value at 0-based rank ceil(i*N/q) - 1.
    """

    q: int
    quantiles: dict[int, np.ndarray]

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("q must be >= 2")
        for var, arr in self.quantiles.items():
            a = np.ascontiguousarray(arr, dtype=np.float64)
            if a.shape != (self.q - 1,):
                raise ValueError(f"variable {var}: expected {self.q - 1} quantiles")
            if np.any(np.diff(a) < 0):
                raise ValueError(f"variable {var}: quantiles must be non-decreasing")
            a.setflags(write=False)
            self.quantiles[var] = a


def compute_quantiles(train: Dataset, q: int) -> QuantileTable:
    if q < 2:
        raise ValueError("q must be >= 2")
    numeric = train.schema.numeric_indices()
    if not numeric:
        raise ValueError("dataset has no numeric variables")
    n = train.n
    ranks = [(i * n + q - 1) // q - 1 for i in range(1, q)]
    table = {}
    for var in numeric:
        col = np.sort(train.values[:, var])
        table[var] = col[ranks].copy()
    return QuantileTable(q, table)


def _cdf_array(knots: np.ndarray, q: int, xs: np.ndarray) -> np.ndarray:
    """Piecewise-linear CDF through knots (Q_i, i/q), right-continuous at ties.

    Values below Q_1 map to 0 and above Q_{q-1} to 1.
    """
    xs = np.asarray(xs, dtype=np.float64)
    j = np.searchsorted(knots, xs, side="right")
    u = np.empty(xs.shape, dtype=np.float64)
    hit = (j > 0) & (knots[np.maximum(j - 1, 0)] == xs)
    below = (j == 0) & ~hit
    above = (j == q - 1) & ~hit
    mid = ~(hit | below | above)
    u[hit] = j[hit] / q
    u[below] = 0.0
    u[above] = 1.0
    jm = j[mid]
    lo = knots[jm - 1]
    hi = knots[jm]
    u[mid] = (jm + (xs[mid] - lo) / (hi - lo)) / q
    return u


def cdf(qt: QuantileTable, var: int, x: float) -> float:
    """Estimated CDF value of x for one numeric variable."""
    return float(_cdf_array(qt.quantiles[var], qt.q, np.array([x]))[0])


def inverse_cdf(qt: QuantileTable, var: int, u: float) -> float:
    """Quantile function: inverse of ``cdf`` on strictly increasing segments.

    u <= 1/q returns Q_1 and u >= (q-1)/q returns Q_{q-1}; inside a flat
    (tied) segment the shared knot value is returned.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u outside [0, 1]: {u}")
    knots = qt.quantiles[var]
    q = qt.q
    t = u * q
    if t <= 1.0:
        return float(knots[0])
    if t >= q - 1.0:
        return float(knots[-1])
    i = int(math.floor(t))
    frac = t - i
    if frac == 0.0:
        return float(knots[i - 1])
    return float(knots[i - 1] + frac * (knots[i] - knots[i - 1]))


def transform_dataset(ds: Dataset, qt: QuantileTable) -> Dataset:
    """Replace numeric values with their CDF image; nominal columns untouched."""
    values = np.array(ds.values, copy=True)
    for var, knots in qt.quantiles.items():
        values[:, var] = _cdf_array(knots, qt.q, values[:, var])
    return Dataset(ds.schema, values, ds.labels)


@dataclass(frozen=True)
class FuzzyPartition:
    """L uniform triangular sets on [0,1], centers at (l-1)/(L-1).

    The end sets act as shoulders because the domain is clipped to [0,1];
    memberships of any point sum to exactly 1.
    """

    n_sets: int

    def __post_init__(self):
        if self.n_sets < 2:
            raise ValueError("a fuzzy partition needs at least 2 sets")

    def centers(self) -> np.ndarray:
        return np.arange(self.n_sets) / (self.n_sets - 1)

    def membership(self, u, set_index: int):
        """Membership of u (scalar or array) in the given set (0-based)."""
        c = set_index / (self.n_sets - 1)
        return np.maximum(0.0, 1.0 - np.abs(np.asarray(u, dtype=np.float64) - c) * (self.n_sets - 1))

    def memberships(self, u: float) -> np.ndarray:
        return np.array([self.membership(u, l) for l in range(self.n_sets)]).reshape(self.n_sets)

    def highest_set(self, u) -> np.ndarray:
        """0-based index of the max-membership set; exact midpoints go low."""
        t = np.asarray(u, dtype=np.float64) * (self.n_sets - 1)
        base = np.floor(t)
        idx = base + (t - base > 0.5)
        return np.clip(idx, 0, self.n_sets - 1).astype(np.int64)

    def vertices(self, set_index: int) -> tuple[float, float, float]:
        """Triangle (left, center, right) in the unit interval, clipped at the ends."""
        h = 1.0 / (self.n_sets - 1)
        c = set_index * h
        return (max(0.0, c - h), c, min(1.0, c + h))


def build_partition(n_sets: int) -> FuzzyPartition:
    return FuzzyPartition(n_sets)


def materialize_original_space(fp: FuzzyPartition, qt: QuantileTable
                               ) -> dict[int, list[tuple[float, float, float]]]:
    """Map each triangle vertex through the inverse CDF, for reporting only."""
    out = {}
    for var in sorted(qt.quantiles):
        out[var] = [
            tuple(inverse_cdf(qt, var, v) for v in fp.vertices(l))
            for l in range(fp.n_sets)
        ]
    return out
