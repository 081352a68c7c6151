"""Two-phase rule induction over partitioned data.

Phase one mines promising itemsets from max-membership discretized examples
(cost-weighted counts, length-dependent support threshold, per-class
confidence selection). Phase two turns the survivors into candidate rules,
computes their cost-weighted matching sums in one distributed pass, resolves
antecedent conflicts by weight, filters on fuzzy support/confidence, caps
each group at its most confident rules, and prunes subsumed rules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import fuzzy
from .dataset import Dataset, PartitionedDataset, Schema, partition
from .engine import Engine, exact_sum
from .fuzzy import FuzzyRule, RuleBase, class_costs, matching_degrees
from .transform import FuzzyPartition, build_partition

CRISP_SUPPORT_SCALE = 0.025
FUZZY_SUPPORT_SCALE = 0.05


class TrainingError(RuntimeError):
    """Training cannot produce a usable model."""


@dataclass(frozen=True)
class InductionConfig:
    n_sets: int = 5
    max_len: int = 3
    min_conf_crisp: float = 0.7
    min_conf_fuzzy: float = 0.6
    gamma: int = 4
    prop: tuple[Fraction, ...] = (Fraction(1, 5), Fraction(3, 10), Fraction(1, 2))
    cost_sensitive: bool = True

    def __post_init__(self):
        prop = tuple(Fraction(str(p)) if not isinstance(p, Fraction) else p for p in self.prop)
        object.__setattr__(self, "prop", prop)
        if len(prop) != self.max_len:
            raise ValueError("prop must declare one proportion per rule length")
        if sum(prop) != 1:
            raise ValueError("prop entries must sum to 1")
        if self.max_len < 1 or self.n_sets < 2 or self.gamma < 1:
            raise ValueError("bad induction configuration")


@dataclass(frozen=True)
class ItemsetStats:
    """Cost-weighted occurrence statistics for one itemset.

    ``itemset`` is a variable-sorted tuple of (variable, code) items;
    ``per_class_counts[m]`` is the summed class-m cost over occurrences and
    ``weighted_count`` their total.
    """

    itemset: tuple[tuple[int, int], ...]
    weighted_count: float
    per_class_counts: tuple[float, ...]

    @property
    def length(self) -> int:
        return len(self.itemset)

    def confidence(self) -> float:
        return max(self.per_class_counts) / self.weighted_count

    def majority_class(self) -> int:
        return int(np.argmax(self.per_class_counts))

    def observed_classes(self) -> list[int]:
        return [m for m, c in enumerate(self.per_class_counts) if c > 0]


@dataclass(frozen=True)
class CandidateRuleStats:
    """Cost-weighted matching sums for one (antecedents, class) candidate."""

    antecedents: tuple[tuple[int, int], ...]
    class_index: int
    match_class: float
    match_not_class: float

    @property
    def total(self) -> float:
        return self.match_class + self.match_not_class


@dataclass(frozen=True)
class ScoredRule:
    """Conflict-resolved rule carrying its weight and fuzzy statistics."""

    antecedents: tuple[tuple[int, int], ...]
    class_index: int
    weight: float
    support: float
    confidence: float

    @property
    def length(self) -> int:
        return len(self.antecedents)


def discretize_example(example: np.ndarray, fp: FuzzyPartition,
                       numeric_mask: np.ndarray) -> np.ndarray:
    """Item codes for one example: max-membership set index per numeric
    variable (midpoint ties to the lower set), nominal codes pass through."""
    return discretize(np.asarray(example, dtype=np.float64).reshape(1, -1), fp, numeric_mask)[0]


def discretize(values: np.ndarray, fp: FuzzyPartition, numeric_mask: np.ndarray) -> np.ndarray:
    codes = np.empty(values.shape, dtype=np.int64)
    for var in range(values.shape[1]):
        col = values[:, var]
        codes[:, var] = fp.highest_set(col) if numeric_mask[var] else col.astype(np.int64)
    return codes


def enumerate_itemsets(items: Sequence[tuple[int, int]], max_len: int
                       ) -> list[tuple[tuple[int, int], ...]]:
    """All variable-sorted subsets of size 1..max_len of one example's items."""
    items = sorted(items)
    out = []
    for k in range(1, max_len + 1):
        out.extend(combinations(items, k))
    return out


def _code_base(schema: Schema, n_sets: int) -> int:
    sizes = [n_sets if a.is_numeric else len(a.values) for a in schema.attributes]
    return max(sizes)


def count_itemsets(pds: PartitionedDataset, fp: FuzzyPartition, costs: np.ndarray,
                   cfg: InductionConfig, engine: Engine) -> tuple[list[ItemsetStats], float]:
    """One pass over all partitions accumulating per-itemset, per-class counts.

    Counting is pure integer work (occurrences), merged exactly across
    partitions; the class costs are applied once at the end, so the result
    is identical for any partition count. Returns the stats in canonical
    itemset order plus the cost-weighted example total N_w.
    """
    schema = pds.dataset.schema
    f = schema.n_attributes
    m = schema.n_classes
    numeric_mask = schema.numeric_mask()
    k_codes = _code_base(schema, fp.n_sets)
    base = f * k_codes + 1
    if base ** cfg.max_len * m >= 2 ** 63:
        raise ValueError(
            "itemset key space exceeds 64 bits; reduce max_len or the attribute count")
    combos = [c for k in range(1, cfg.max_len + 1) for c in combinations(range(f), k)]
    offsets = np.arange(f, dtype=np.int64) * k_codes + 1
    pads = [base ** (cfg.max_len - k) for k in range(cfg.max_len + 1)]

    def task(part):
        codes = discretize(part.values, fp, numeric_mask)
        ids = codes + offsets
        packed = []
        for combo in combos:
            key = ids[:, combo[0]].astype(np.int64)
            for c in combo[1:]:
                key = key * base + ids[:, c]
            key = key * pads[len(combo)]
            packed.append(key * m + part.labels)
        keys = np.concatenate(packed) if packed else np.empty(0, dtype=np.int64)
        uniq, cnt = np.unique(keys, return_counts=True)
        return uniq, cnt.astype(np.int64)

    partials = engine.map_partitions(pds.parts(), task)
    all_keys = np.concatenate([p[0] for p in partials])
    all_cnts = np.concatenate([p[1] for p in partials])
    uniq, inverse = np.unique(all_keys, return_inverse=True)
    sums = np.bincount(inverse, weights=all_cnts.astype(np.float64)).astype(np.int64)

    by_itemset: dict[int, np.ndarray] = {}
    for key, count in zip(uniq.tolist(), sums.tolist()):
        itemset_key, label = divmod(key, m)
        occ = by_itemset.get(itemset_key)
        if occ is None:
            occ = np.zeros(m, dtype=np.int64)
            by_itemset[itemset_key] = occ
        occ[label] = count

    def decode(itemset_key: int) -> tuple[tuple[int, int], ...]:
        ids = []
        for _ in range(cfg.max_len):
            itemset_key, rem = divmod(itemset_key, base)
            ids.append(rem)
        return tuple((int((i - 1) // k_codes), int((i - 1) % k_codes))
                     for i in reversed(ids) if i > 0)

    stats = []
    for itemset_key, occ in by_itemset.items():
        itemset = decode(itemset_key)
        pcc = tuple(float(occ[cls] * costs[cls]) for cls in range(m))
        stats.append(ItemsetStats(itemset, exact_sum(pcc), pcc))
    stats.sort(key=lambda s: (s.length, s.itemset))

    class_totals = np.bincount(pds.dataset.labels, minlength=m)
    n_w = exact_sum(float(class_totals[cls] * costs[cls]) for cls in range(m))
    return stats, n_w


def crisp_support_threshold(length: int, n_classes: int) -> float:
    return CRISP_SUPPORT_SCALE / (length * n_classes)


def fuzzy_support_threshold(length: int, n_classes: int) -> float:
    return FUZZY_SUPPORT_SCALE / (length * n_classes)


def filter_frequent(stats: Iterable[ItemsetStats], n_classes: int, n_w: float
                    ) -> list[ItemsetStats]:
    """Keep itemsets whose weighted relative support reaches the
    length-dependent threshold. No subset-based pruning: an itemset may be
    frequent even when its sub-itemsets are not."""
    return [s for s in stats
            if s.weighted_count / n_w >= crisp_support_threshold(s.length, n_classes)]


def select_confident(stats: Sequence[ItemsetStats], cfg: InductionConfig
                     ) -> list[ItemsetStats]:
    """Two-criteria confidence selection.

    Within each group (itemsets sharing a majority class, or one global
    group when cost sensitivity is off): when more than half pass the crisp
    confidence threshold only the failures are dropped, otherwise the group
    is sorted by confidence and the top ceil(size/2) kept. An itemset is
    then dropped when a proper sub-itemset survived with strictly greater
    confidence.
    """
    groups: dict[int, list[ItemsetStats]] = {}
    for s in stats:
        key = s.majority_class() if cfg.cost_sensitive else 0
        groups.setdefault(key, []).append(s)

    survivors: list[ItemsetStats] = []
    for key in sorted(groups):
        group = groups[key]
        passing = [s for s in group if s.confidence() >= cfg.min_conf_crisp]
        if 2 * len(passing) > len(group):
            survivors.extend(passing)
        else:
            ordered = sorted(group, key=lambda s: (-s.confidence(), s.itemset))
            survivors.extend(ordered[:math.ceil(len(group) / 2)])

    conf_by_itemset = {s.itemset: s.confidence() for s in survivors}
    kept = []
    for s in survivors:
        conf = conf_by_itemset[s.itemset]
        dominated = False
        if s.length > 1:
            for k in range(1, s.length):
                for sub in combinations(s.itemset, k):
                    sub_conf = conf_by_itemset.get(sub)
                    if sub_conf is not None and sub_conf > conf:
                        dominated = True
                        break
                if dominated:
                    break
        if not dominated:
            kept.append(s)
    kept.sort(key=lambda s: (s.length, s.itemset))
    return kept


def itemsets_to_candidates(promising: Iterable[ItemsetStats]
                           ) -> list[tuple[tuple[tuple[int, int], ...], int]]:
    """One candidate rule per (itemset, observed class) pair."""
    out = []
    for s in promising:
        for cls in s.observed_classes():
            out.append((s.itemset, cls))
    out.sort()
    return out


def compute_rule_stats(candidates: Sequence[tuple[tuple[tuple[int, int], ...], int]],
                       pds: PartitionedDataset, costs: np.ndarray, fp: FuzzyPartition,
                       engine: Engine, chunk_size: int = 64) -> list[CandidateRuleStats]:
    """Cost-weighted matching sums for every candidate in one distributed pass.

    Candidates sharing an antecedent group reuse the same matching degrees.
    Per-example degrees are gathered back in dataset order and summed once
    with exact compensated summation, keeping the result independent of the
    partition count.
    """
    schema = pds.dataset.schema
    m = schema.n_classes
    numeric_mask = schema.numeric_mask()
    groups = sorted({ant for ant, _ in candidates})
    labels = pds.dataset.labels
    class_rows = [np.flatnonzero(labels == cls) for cls in range(m)]

    sums: dict[tuple, list[float]] = {}
    for start in range(0, len(groups), chunk_size):
        chunk = groups[start:start + chunk_size]

        def task(part, chunk=chunk):
            return np.stack(
                [matching_degrees(ant, part.values, fp, numeric_mask) for ant in chunk],
                axis=1)

        mats = engine.map_partitions(pds.parts(), task)
        mu_all = np.vstack(mats)
        for gi, ant in enumerate(chunk):
            col = mu_all[:, gi]
            sums[ant] = [exact_sum(col[class_rows[cls]].tolist()) for cls in range(m)]

    out = []
    for ant, cls in candidates:
        s = sums[ant]
        match_class = float(costs[cls] * s[cls])
        match_not = exact_sum(float(costs[other] * s[other])
                              for other in range(m) if other != cls)
        out.append(CandidateRuleStats(ant, cls, match_class, match_not))
    return out


def resolve_conflicts(cand_stats: Sequence[CandidateRuleStats]) -> list[ScoredRule]:
    """Per antecedent group keep the class with the largest weight.

    Uncovered groups (no matched example) are dropped, as are groups whose
    winning weight is not positive. Exact weight ties go to the lower class.
    """
    grouped: dict[tuple, list[CandidateRuleStats]] = {}
    for cs in cand_stats:
        grouped.setdefault(cs.antecedents, []).append(cs)
    out = []
    for ant in sorted(grouped):
        entries = grouped[ant]
        scored = []
        for cs in entries:
            if cs.total <= 0.0:
                continue
            scored.append((fuzzy.rule_weight(cs.match_class, cs.match_not_class), cs))
        if not scored:
            continue
        weight, best = min(scored, key=lambda t: (-t[0], t[1].class_index))
        if weight <= 0.0:
            continue
        # support carries the raw matching total until filter_rules normalizes it
        out.append(ScoredRule(ant, best.class_index, weight,
                              support=best.total,
                              confidence=best.match_class / best.total))
    return out


def filter_rules(rules: Iterable[ScoredRule], cfg: InductionConfig, n_classes: int,
                 n_w: float) -> list[ScoredRule]:
    """Keep rules whose fuzzy support and confidence reach their thresholds.

    At this point ``support`` still holds the raw matching total; it is
    normalized by the cost-weighted example count here.
    """
    kept = []
    for r in rules:
        supp = r.support / n_w
        if supp >= fuzzy_support_threshold(r.length, n_classes) and r.confidence >= cfg.min_conf_fuzzy:
            kept.append(ScoredRule(r.antecedents, r.class_index, r.weight, supp, r.confidence))
    return kept


def rule_cap(length: int, cfg: InductionConfig, n_attributes: int, n_classes: int) -> int:
    """Most-confident-rule cap per group; rational arithmetic keeps the
    ceiling exact when the proportions are decimal fractions."""
    cap = Fraction(cfg.n_sets * n_attributes * cfg.gamma) * cfg.prop[length - 1]
    if not cfg.cost_sensitive:
        cap *= n_classes
    return math.ceil(cap)


def select_top_rules(rules: Sequence[ScoredRule], cfg: InductionConfig,
                     schema: Schema) -> list[ScoredRule]:
    """Keep the most confident rules per (class, length) group, or per length
    group when cost sensitivity is off (with the class-scaled cap)."""
    groups: dict[tuple, list[ScoredRule]] = {}
    for r in rules:
        key = (r.class_index, r.length) if cfg.cost_sensitive else (r.length,)
        groups.setdefault(key, []).append(r)
    kept = []
    for key in sorted(groups):
        group = sorted(groups[key], key=lambda r: (-r.confidence, r.antecedents))
        length = key[-1]
        kept.extend(group[:rule_cap(length, cfg, schema.n_attributes, schema.n_classes)])
    kept.sort(key=lambda r: (r.length, r.class_index, r.antecedents))
    return kept


def prune_subsumed(rules: Sequence[ScoredRule]) -> list[ScoredRule]:
    """Drop any rule containing all antecedents of a strictly shorter,
    strictly more confident surviving rule. Shortest rules are fixed first."""
    survivors: list[tuple[frozenset, ScoredRule]] = []
    for rule in sorted(rules, key=lambda r: (r.length, r.class_index, r.antecedents)):
        ants = frozenset(rule.antecedents)
        dominated = any(
            s_rule.length < rule.length
            and s_rule.confidence > rule.confidence
            and s_ants <= ants
            for s_ants, s_rule in survivors
        )
        if not dominated:
            survivors.append((ants, rule))
    return [r for _, r in survivors]


def induce(train: Dataset, cfg: InductionConfig, n_partitions: int = 1,
           engine: Engine | None = None, debug_itemsets=None) -> RuleBase:
    """Full induction pipeline over the transformed training set.

    The output rule base is canonically ordered and identical for any
    partition count and thread count.
    """
    engine = engine or Engine()
    fp = build_partition(cfg.n_sets)
    costs = class_costs(train, cfg.cost_sensitive)
    pds = partition(train, n_partitions)
    schema = train.schema
    m = schema.n_classes

    stats, n_w = count_itemsets(pds, fp, costs, cfg, engine)
    if debug_itemsets is not None:
        _dump_itemsets(stats, schema, fp, debug_itemsets)
    frequent = filter_frequent(stats, m, n_w)
    promising = select_confident(frequent, cfg)
    candidates = itemsets_to_candidates(promising)
    cand_stats = compute_rule_stats(candidates, pds, costs, fp, engine)
    resolved = resolve_conflicts(cand_stats)
    kept = filter_rules(resolved, cfg, m, n_w)
    capped = select_top_rules(kept, cfg, schema)
    final = prune_subsumed(capped)
    if not final:
        raise TrainingError(
            "no rules survived induction; try a larger gamma or lower confidence thresholds")
    rules = tuple(
        FuzzyRule(r.antecedents, r.class_index, r.weight, r.support, r.confidence)
        for r in sorted(final, key=lambda r: (r.length, r.class_index, r.antecedents))
    )
    return RuleBase(rules, fp, schema)


def _render_itemset(itemset, schema: Schema) -> str:
    parts = []
    for var, code in itemset:
        attr = schema.attributes[var]
        label = f"L{code + 1}" if attr.is_numeric else attr.values[code]
        parts.append(f"{attr.name}={label}")
    return "{" + ", ".join(parts) + "}"


def _dump_itemsets(stats: Sequence[ItemsetStats], schema: Schema, fp: FuzzyPartition,
                   path) -> None:
    with open(path, "w") as fh:
        for s in stats:
            per_class = " ".join(f"{c:.6g}" for c in s.per_class_counts)
            fh.write(f"{_render_itemset(s.itemset, schema)}\t"
                     f"count={s.weighted_count:.6g}\tper_class=[{per_class}]\n")
