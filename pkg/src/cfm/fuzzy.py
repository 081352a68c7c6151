"""Fuzzy rules, matching and association degrees, class costs, and
winning-rule inference."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import DataError, Dataset, Schema
from .transform import FuzzyPartition

NO_COVER = -1


@dataclass(frozen=True)
class FuzzyRule:
    """One linguistic rule.

    Antecedents are (variable index, code) pairs sorted by variable, where
    the code is a fuzzy-set index for numeric variables and a nominal value
    index otherwise. Variables not mentioned are don't-care.
    """

    antecedents: tuple[tuple[int, int], ...]
    class_index: int
    weight: float
    support: float = math.nan
    confidence: float = math.nan

    def __post_init__(self):
        variables = [v for v, _ in self.antecedents]
        if sorted(set(variables)) != variables:
            raise ValueError("antecedents must be sorted by variable, one per variable")
        if not math.isfinite(self.weight):
            raise ValueError("rule weight must be finite")

    @property
    def length(self) -> int:
        return len(self.antecedents)


def rule_sort_key(rule: FuzzyRule):
    """Canonical rule order: length, class, then lexicographic antecedents."""
    return (rule.length, rule.class_index, rule.antecedents)


def matching_degrees(antecedents, values: np.ndarray, fp: FuzzyPartition,
                     numeric_mask: np.ndarray) -> np.ndarray:
    """Matching degree of every row: product over antecedents of the
    membership degree (numeric) or crisp equality (nominal)."""
    mu = np.ones(values.shape[0], dtype=np.float64)
    for var, code in antecedents:
        col = values[:, var]
        if numeric_mask[var]:
            mu = mu * fp.membership(col, code)
        else:
            mu = mu * (col == code)
    return mu


def matching_degree(rule: FuzzyRule, example: np.ndarray, fp: FuzzyPartition,
                    numeric_mask: np.ndarray) -> float:
    return float(matching_degrees(rule.antecedents,
                                  np.asarray(example, dtype=np.float64).reshape(1, -1),
                                  fp, numeric_mask)[0])


def class_costs(train: Dataset, cost_sensitive: bool = True) -> np.ndarray:
    """Per-class misclassification cost: majority count over class count.

    The majority class gets cost exactly 1. With cost sensitivity off all
    costs are 1 and class frequencies are ignored.
    """
    m = train.schema.n_classes
    counts = np.bincount(train.labels, minlength=m)
    for idx, c in enumerate(counts):
        if c == 0:
            raise DataError(
                f"class {train.schema.class_labels[idx]!r} is absent from the training data")
    if not cost_sensitive:
        return np.ones(m, dtype=np.float64)
    return counts.max() / counts.astype(np.float64)


def rule_weight(match_class: float, match_not_class: float) -> float:
    """Cost-weighted certainty factor in [-1, 1]."""
    total = match_class + match_not_class
    if total <= 0.0:
        raise ValueError("uncovered rule: no example matches the antecedents")
    return (match_class - match_not_class) / total


@dataclass(frozen=True)
class RuleBase:
    rules: tuple[FuzzyRule, ...]
    fuzzy_partition: FuzzyPartition
    schema: Schema

    def __post_init__(self):
        seen = set()
        for rule in self.rules:
            if rule.antecedents in seen:
                raise ValueError(f"duplicate antecedent set: {rule.antecedents}")
            seen.add(rule.antecedents)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    def mean_rule_length(self) -> float:
        if not self.rules:
            return 0.0
        return sum(r.length for r in self.rules) / len(self.rules)


def classify(rb: RuleBase, example: np.ndarray) -> tuple[int, float]:
    """Winning-rule prediction for one example.

    Returns (class index, winning association degree). When no rule fires
    with positive association the prediction is NO_COVER with degree 0.
    Exact ties go to the lowest class index, then the earliest rule.
    """
    if not rb.rules:
        raise ValueError("rule base is empty")
    numeric_mask = rb.schema.numeric_mask()
    best_b = 0.0
    best_class = NO_COVER
    for rule in rb.rules:
        mu = matching_degree(rule, example, rb.fuzzy_partition, numeric_mask)
        b = mu * rule.weight
        if b > best_b or (b == best_b and b > 0.0 and rule.class_index < best_class):
            best_b = b
            best_class = rule.class_index
    if best_b <= 0.0:
        return NO_COVER, 0.0
    return best_class, best_b


def classify_batch(rb: RuleBase, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized winning-rule prediction; same tie handling as ``classify``."""
    if not rb.rules:
        raise ValueError("rule base is empty")
    n = values.shape[0]
    numeric_mask = rb.schema.numeric_mask()
    best_b = np.zeros(n, dtype=np.float64)
    best_class = np.full(n, NO_COVER, dtype=np.int64)
    for rule in rb.rules:
        b = matching_degrees(rule.antecedents, values, rb.fuzzy_partition, numeric_mask)
        b = b * rule.weight
        update = (b > best_b) | ((b == best_b) & (b > 0.0) & (rule.class_index < best_class))
        best_b = np.where(update, b, best_b)
        best_class = np.where(update, rule.class_index, best_class)
    best_class[best_b <= 0.0] = NO_COVER
    best_b[best_b <= 0.0] = 0.0
    return best_class, best_b


def render_rule(rule: FuzzyRule, schema: Schema) -> str:
    """Human-readable form: IF x IS L2 AND y IS b THEN pos (RW=..., supp=..., conf=...)."""
    terms = []
    for var, code in rule.antecedents:
        attr = schema.attributes[var]
        label = f"L{code + 1}" if attr.is_numeric else attr.values[code]
        terms.append(f"{attr.name} IS {label}")
    head = " AND ".join(terms)
    cls = schema.class_labels[rule.class_index]
    return (f"IF {head} THEN {cls} "
            f"(RW={rule.weight:.6g}, supp={rule.support:.6g}, conf={rule.confidence:.6g})")
