"""Binary-coded elitist rule selection.

A chromosome selects a subset of the induced rules. Mating uses half-uniform
crossover gated by a decaying hamming-distance threshold; when the search
stalls the population diverges around the best individual. Fitness balances
training accuracy (geometric mean in cost-sensitive mode, plain accuracy
otherwise) against the selected rule count.

Fitness evaluation is distributed: every example's positive association
degrees are precomputed once into a partitioned lookup table, each partition
produces partial confusion matrices per chromosome, and the partials merge
in partition-index order. All randomness stays on the driver, so a seed
fixes the outcome for any partition or thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metrics
from .dataset import PartitionedDataset
from .engine import Engine
from .fuzzy import RuleBase, matching_degrees


@dataclass(frozen=True)
class ChcConfig:
    population_size: int = 50
    max_evaluations: int = 10000
    max_restarts: int = 3
    delta: float = 0.15
    restart_gamma: float = 0.35
    phi: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2 or self.max_evaluations < 1 or self.max_restarts < 0:
            raise ValueError("bad CHC configuration")
        for name in ("delta", "restart_gamma", "phi"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass
class Chromosome:
    """Rule-selection bit vector with its fitness cached once evaluated."""

    genes: np.ndarray
    fitness: float | None = None

    def __post_init__(self):
        genes = np.ascontiguousarray(self.genes, dtype=np.uint8)
        genes.setflags(write=False)
        self.genes = genes

    @property
    def n_selected(self) -> int:
        return int(self.genes.sum())

    def sort_key(self):
        # fitness descending, then fewer rules, then lexicographically smaller genes
        return (-self.fitness, self.n_selected, self.genes.tobytes())


@dataclass(frozen=True)
class TablePart:
    """Per-partition slice of the association lookup table.

    Entries are grouped by example and sorted by association degree
    descending (ties: class then rule index ascending, matching the
    winning-rule tie-break). ``starts`` indexes the first entry of each
    example that has at least one entry; examples without entries are
    uncovered for every chromosome and pre-counted in ``base_no_cover``.
    """

    starts: np.ndarray
    entry_rule: np.ndarray
    entry_degree: np.ndarray
    seg_labels: np.ndarray
    base_no_cover: np.ndarray


@dataclass(frozen=True)
class AssociationTable:
    rule_classes: np.ndarray
    n_rules: int
    n_classes: int
    n_examples: int
    parts: tuple[TablePart, ...]


def precompute_table(rb: RuleBase, pds: PartitionedDataset, engine: Engine
                     ) -> AssociationTable:
    """Positive association degrees of every (rule, example) pair, partitioned
    alongside the data."""
    schema = rb.schema
    numeric_mask = schema.numeric_mask()
    weights = np.array([r.weight for r in rb.rules], dtype=np.float64)
    classes = np.array([r.class_index for r in rb.rules], dtype=np.int64)
    m = schema.n_classes

    def task(part):
        rows_list, rule_list, b_list = [], [], []
        for ri, rule in enumerate(rb.rules):
            mu = matching_degrees(rule.antecedents, part.values, rb.fuzzy_partition,
                                  numeric_mask)
            b = mu * weights[ri]
            nz = np.flatnonzero(b > 0.0)
            rows_list.append(nz)
            rule_list.append(np.full(nz.shape, ri, dtype=np.int64))
            b_list.append(b[nz])
        rows = np.concatenate(rows_list) if rows_list else np.empty(0, dtype=np.int64)
        rule_ids = np.concatenate(rule_list) if rule_list else np.empty(0, dtype=np.int64)
        degrees = np.concatenate(b_list) if b_list else np.empty(0)
        order = np.lexsort((rule_ids, classes[rule_ids], -degrees, rows))
        rows, rule_ids, degrees = rows[order], rule_ids[order], degrees[order]
        starts = np.flatnonzero(np.diff(rows, prepend=-1))
        seg_labels = part.labels[rows[starts]] if starts.size else np.empty(0, dtype=np.int64)
        covered_counts = np.bincount(seg_labels, minlength=m)
        all_counts = np.bincount(part.labels, minlength=m)
        return TablePart(starts, rule_ids, degrees, seg_labels,
                         (all_counts - covered_counts).astype(np.int64))

    parts = tuple(engine.map_partitions(pds.parts(), task))
    return AssociationTable(classes, len(rb.rules), m, pds.dataset.n, parts)


def classify_with_table(table: AssociationTable, genes: np.ndarray) -> metrics.ConfusionMatrix:
    """Confusion matrix of the sub-rule-base selected by ``genes`` over the
    table's examples (merged across partitions in index order)."""
    sel = [np.asarray(genes, dtype=bool)]
    m = table.n_classes
    counts = np.zeros((m, m), dtype=np.int64)
    no_cover = np.zeros(m, dtype=np.int64)
    for part in table.parts:
        (cm, nc), = _merge_part(sel, table, part)
        counts += cm
        no_cover += nc
    return metrics.ConfusionMatrix(counts, no_cover)


def fitness_of(cm: metrics.ConfusionMatrix, n_selected: int, n_rules_initial: int,
               delta: float, cost_sensitive: bool) -> float:
    acc = metrics.gm(cm) if cost_sensitive else metrics.accuracy(cm)
    penalty = delta * n_rules_initial / (n_rules_initial - n_selected + 1)
    return acc - penalty


def evaluate(chromosomes: list[Chromosome], table: AssociationTable,
             cost_sensitive: bool, delta: float, engine: Engine) -> None:
    """Fill in the fitness of every chromosome in the batch.

    Each partition contributes a partial confusion matrix per chromosome;
    the empty selection gets a -inf sentinel so it can never win.
    """
    def task(part):
        return _merge_part([c.genes.astype(bool) for c in chromosomes], table, part)

    partials = engine.map_partitions(table.parts, task)
    totals = engine.reduce_indexed(
        partials,
        lambda a, b: [(ca + cb, na + nb) for (ca, na), (cb, nb) in zip(a, b)],
    )
    for chrom, (counts, no_cover) in zip(chromosomes, totals):
        if chrom.n_selected == 0:
            chrom.fitness = -math.inf
            continue
        cm = metrics.ConfusionMatrix(counts, no_cover)
        chrom.fitness = fitness_of(cm, chrom.n_selected, table.n_rules, delta,
                                   cost_sensitive)


def _merge_part(sel_batch: list[np.ndarray], table: AssociationTable, part: TablePart
                ) -> list[tuple[np.ndarray, np.ndarray]]:
    m = table.n_classes
    out = []
    n_entries = part.entry_rule.shape[0]
    positions = np.arange(n_entries, dtype=np.int64)
    for sel in sel_batch:
        if part.starts.size == 0:
            out.append((np.zeros((m, m), dtype=np.int64), part.base_no_cover.copy()))
            continue
        chosen = sel[part.entry_rule]
        pos = np.where(chosen, positions, n_entries)
        first = np.minimum.reduceat(pos, part.starts)
        covered = first < n_entries
        pred = table.rule_classes[part.entry_rule[np.minimum(first, n_entries - 1)]]
        true = part.seg_labels
        cm = np.bincount(true[covered] * m + pred[covered], minlength=m * m).reshape(m, m)
        nc = np.bincount(true[~covered], minlength=m) + part.base_no_cover
        out.append((cm.astype(np.int64), nc.astype(np.int64)))
    return out


def hux(parent1: np.ndarray, parent2: np.ndarray, rng: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]:
    """Half-uniform crossover: swap a uniformly random half of the differing
    genes between copies of the parents."""
    if parent1.shape != parent2.shape:
        raise ValueError("parents must have equal length")
    child1 = np.array(parent1, dtype=np.uint8)
    child2 = np.array(parent2, dtype=np.uint8)
    diff = np.flatnonzero(parent1 != parent2)
    half = diff.size // 2
    if half > 0:
        swap = rng.choice(diff, size=half, replace=False)
        child1[swap], child2[swap] = child2[swap], child1[swap].copy()
    return child1, child2


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    evaluations: int
    best_fitness: float
    best_selected: int
    threshold: float
    restarts: int
    restarted: bool

    def line(self) -> str:
        return (f"gen={self.generation} evals={self.evaluations} "
                f"best_fitness={self.best_fitness:.6f} best_rules={self.best_selected} "
                f"D={self.threshold:.3f} restarts={self.restarts}"
                + (" restarted" if self.restarted else ""))


@dataclass
class RunResult:
    rule_base: RuleBase
    best_genes: np.ndarray
    best_fitness: float
    evaluations: int
    generations: int
    history: tuple[GenerationRecord, ...]
    evaluated: tuple[tuple[bytes, float], ...] | None = None


def run(rb: RuleBase, pds: PartitionedDataset, cfg: ChcConfig, cost_sensitive: bool,
        engine: Engine | None = None, progress=None, record_evaluations: bool = False
        ) -> RunResult:
    """Select a rule subset; elitist, seed-deterministic, partition-count-free.

    The first individual selects every rule, so the unselected base is always
    a candidate solution and the best-ever fitness never decreases.
    """
    if not rb.rules:
        raise ValueError("rule base is empty")
    engine = engine or Engine()
    table = precompute_table(rb, pds, engine)
    n_rules = len(rb.rules)
    rng = np.random.default_rng(cfg.seed)
    log: list[tuple[bytes, float]] = []

    def evaluate_batch(batch: list[Chromosome]) -> int:
        evaluate(batch, table, cost_sensitive, cfg.delta, engine)
        if record_evaluations:
            log.extend((c.genes.tobytes(), c.fitness) for c in batch)
        return len(batch)

    population = [Chromosome(np.ones(n_rules, dtype=np.uint8))]
    population += [Chromosome(rng.integers(0, 2, n_rules, dtype=np.uint8))
                   for _ in range(cfg.population_size - 1)]
    evaluations = evaluate_batch(population)

    best = min(population, key=Chromosome.sort_key)
    d_init = n_rules / 4.0
    threshold = d_init
    restarts_since_improvement = 0
    total_restarts = 0
    generation = 0
    history: list[GenerationRecord] = []

    def note(restarted: bool) -> None:
        rec = GenerationRecord(generation, evaluations, best.fitness, best.n_selected,
                               threshold, total_restarts, restarted)
        history.append(rec)
        if progress is not None:
            progress(rec)

    while evaluations < cfg.max_evaluations:
        generation += 1
        order = rng.permutation(cfg.population_size)
        offspring: list[Chromosome] = []
        for i in range(0, cfg.population_size - 1, 2):
            p1 = population[order[i]]
            p2 = population[order[i + 1]]
            hamming = int(np.count_nonzero(p1.genes != p2.genes))
            if hamming / 2.0 > threshold:
                c1, c2 = hux(p1.genes, p2.genes, rng)
                offspring.append(Chromosome(c1))
                offspring.append(Chromosome(c2))
        if offspring:
            evaluations += evaluate_batch(offspring)

        combined = population + offspring
        combined.sort(key=Chromosome.sort_key)
        survivors = combined[:cfg.population_size]
        offspring_ids = {id(c) for c in offspring}
        entered = any(id(c) in offspring_ids for c in survivors)
        population = survivors

        new_best = population[0]
        if new_best.fitness > best.fitness or (
                new_best.fitness == best.fitness and new_best.sort_key() < best.sort_key()):
            if new_best.fitness > best.fitness:
                restarts_since_improvement = 0
            best = new_best

        restarted = False
        if not entered:
            threshold -= cfg.phi * d_init
            if threshold < 0.0 and evaluations < cfg.max_evaluations:
                if restarts_since_improvement >= cfg.max_restarts:
                    note(False)
                    break
                fresh: list[Chromosome] = []
                for _ in range(cfg.population_size - 1):
                    flip = rng.random(n_rules) < cfg.restart_gamma
                    coin = rng.integers(0, 2, n_rules, dtype=np.uint8)
                    fresh.append(Chromosome(np.where(flip, coin, best.genes)))
                evaluations += evaluate_batch(fresh)
                population = [best] + fresh
                threshold = d_init
                total_restarts += 1
                restarts_since_improvement += 1
                restarted = True
                new_best = min(population, key=Chromosome.sort_key)
                if new_best.fitness > best.fitness:
                    restarts_since_improvement = 0
                    best = new_best
        note(restarted)

    selected = tuple(rule for rule, bit in zip(rb.rules, best.genes) if bit)
    result_rb = RuleBase(selected, rb.fuzzy_partition, rb.schema)
    return RunResult(result_rb, best.genes, best.fitness, evaluations, generation,
                     tuple(history), tuple(log) if record_evaluations else None)
