import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfm import (ChcConfig, Dataset, Engine, FuzzyRule, RuleBase, build_partition,
                 classify, classify_batch, hux, partition)
from cfm.chc import (evaluate, Chromosome, classify_with_table, precompute_table,
                     run)
from tests.conftest import numeric_schema


def toy_rule_base(n_rules=10, n_features=2, seed=0):
    """Rules with varied antecedents and positive weights over [0,1]^d data."""
    rng = np.random.default_rng(seed)
    fp = build_partition(5)
    schema = numeric_schema(n_features)
    rules = []
    seen = set()
    while len(rules) < n_rules:
        length = int(rng.integers(1, min(3, n_features) + 1))
        variables = sorted(rng.choice(n_features, size=length, replace=False).tolist())
        ants = tuple((v, int(rng.integers(0, 5))) for v in variables)
        if ants in seen:
            continue
        seen.add(ants)
        rules.append(FuzzyRule(ants, int(rng.integers(0, 2)),
                               float(rng.uniform(0.2, 1.0))))
    return RuleBase(tuple(rules), fp, schema)


def toy_data(n=60, n_features=2, seed=1):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0, 1, size=(n, n_features))
    labels = rng.integers(0, 2, size=n)
    return Dataset(numeric_schema(n_features), values, labels)


def oracle_fitness(rb, genes, data, delta, cost_sensitive):
    """Single-threaded re-evaluation through the direct inference path."""
    selected = tuple(r for r, g in zip(rb.rules, genes) if g)
    if not selected:
        return -math.inf
    sub = RuleBase(selected, rb.fuzzy_partition, rb.schema)
    m = rb.schema.n_classes
    totals = [0] * m
    correct = [0] * m
    for i in range(data.n):
        true = int(data.labels[i])
        pred, _ = classify(sub, data.values[i])
        totals[true] += 1
        if pred == true:
            correct[true] += 1
    if cost_sensitive:
        tpr = [c / t for c, t in zip(correct, totals)]
        acc = 0.0 if min(tpr) == 0.0 else math.exp(
            math.fsum(math.log(t) for t in tpr) / m)
    else:
        acc = sum(correct) / data.n
    n_sel = len(selected)
    return acc - delta * len(rb.rules) / (len(rb.rules) - n_sel + 1)


class TestPrecomputeTable:
    def test_single_pair_entry(self):
        fp = build_partition(5)
        schema = numeric_schema(1)
        rb = RuleBase((FuzzyRule(((0, 2),), 1, 0.5),), fp, schema)
        data = Dataset(schema, np.array([[0.45]]), np.array([1]))
        table = precompute_table(rb, partition(data, 1), Engine())
        part = table.parts[0]
        assert part.entry_rule.tolist() == [0]
        # membership 0.8 at set 3, weight 0.5
        assert part.entry_degree[0] == pytest.approx(0.4, abs=1e-12)

    def test_zero_membership_no_entry(self):
        fp = build_partition(5)
        schema = numeric_schema(1)
        rb = RuleBase((FuzzyRule(((0, 4),), 0, 1.0),), fp, schema)
        data = Dataset(schema, np.array([[0.1]]), np.array([0]))
        table = precompute_table(rb, partition(data, 1), Engine())
        assert table.parts[0].entry_rule.size == 0
        assert table.parts[0].base_no_cover.tolist() == [1, 0]

    @pytest.mark.parametrize("n_partitions", [1, 3])
    def test_table_classification_matches_direct_path(self, n_partitions):
        rb = toy_rule_base(12, seed=5)
        data = toy_data(80, seed=6)
        table = precompute_table(rb, partition(data, n_partitions), Engine())
        cm = classify_with_table(table, np.ones(12, dtype=np.uint8))
        preds, _ = classify_batch(rb, data.values)
        from cfm import ConfusionMatrix
        want = ConfusionMatrix.from_predictions(data.labels, preds, 2)
        assert np.array_equal(cm.counts, want.counts)
        assert np.array_equal(cm.no_cover, want.no_cover)


class TestHux:
    def test_identical_parents_unchanged(self):
        rng = np.random.default_rng(0)
        p = np.array([1, 0, 1, 0], dtype=np.uint8)
        c1, c2 = hux(p, p.copy(), rng)
        assert np.array_equal(c1, p) and np.array_equal(c2, p)

    def test_opposite_parents_swap_half(self):
        rng = np.random.default_rng(1)
        p1 = np.zeros(4, dtype=np.uint8)
        p2 = np.ones(4, dtype=np.uint8)
        c1, c2 = hux(p1, p2, rng)
        assert int((c1 != p1).sum()) == 2
        assert int((c2 != p2).sum()) == 2

    @given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1), st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_children_preserve_difference_set(self, a, b, seed):
        p1 = np.array([(a >> i) & 1 for i in range(16)], dtype=np.uint8)
        p2 = np.array([(b >> i) & 1 for i in range(16)], dtype=np.uint8)
        c1, c2 = hux(p1, p2, np.random.default_rng(seed))
        assert np.array_equal(c1 ^ c2, p1 ^ p2)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            hux(np.zeros(3, dtype=np.uint8), np.zeros(4, dtype=np.uint8),
                np.random.default_rng(0))


class TestEvaluate:
    def test_all_sixteen_chromosomes_match_oracle(self):
        rb = toy_rule_base(4, seed=2)
        data = toy_data(50, seed=3)
        table = precompute_table(rb, partition(data, 2), Engine())
        for cost_sensitive in (True, False):
            batch = [Chromosome(np.array(bits, dtype=np.uint8))
                     for bits in itertools.product((0, 1), repeat=4)]
            evaluate(batch, table, cost_sensitive, 0.15, Engine())
            for chrom in batch:
                want = oracle_fitness(rb, chrom.genes, data, 0.15, cost_sensitive)
                if math.isinf(want):
                    assert math.isinf(chrom.fitness)
                else:
                    assert chrom.fitness == pytest.approx(want, abs=1e-12)

    def test_single_perfect_rule_fitness(self):
        fp = build_partition(5)
        schema = numeric_schema(1)
        rules = (FuzzyRule(((0, 2),), 0, 1.0), FuzzyRule(((0, 0),), 1, 0.5))
        rb = RuleBase(rules, fp, schema)
        # both examples sit at the center set and belong to class 0
        data = Dataset(schema, np.array([[0.5], [0.5], [0.5], [0.4]]),
                       np.array([0, 0, 0, 1]))
        table = precompute_table(rb, partition(data, 1), Engine())
        chrom = Chromosome(np.array([1, 0], dtype=np.uint8))
        evaluate([chrom], table, False, 0.15, Engine())
        # acc = 0.75 (class 1 example misclassified), penalty = 0.15 * 2 / 2
        assert chrom.fitness == pytest.approx(0.75 - 0.15, abs=1e-12)

    def test_empty_selection_sentinel(self):
        rb = toy_rule_base(3, seed=4)
        data = toy_data(20, seed=5)
        table = precompute_table(rb, partition(data, 1), Engine())
        chrom = Chromosome(np.zeros(3, dtype=np.uint8))
        evaluate([chrom], table, True, 0.15, Engine())
        assert chrom.fitness == -math.inf

    def test_partition_count_invariant(self):
        rb = toy_rule_base(6, seed=6)
        data = toy_data(70, seed=7)
        rng = np.random.default_rng(8)
        genes = [rng.integers(0, 2, 6, dtype=np.uint8) for _ in range(10)]
        results = []
        for p in (1, 2, 5):
            table = precompute_table(rb, partition(data, p), Engine())
            batch = [Chromosome(g.copy()) for g in genes]
            evaluate(batch, table, True, 0.15, Engine())
            results.append([c.fitness for c in batch])
        assert results[0] == results[1] == results[2]


class TestRun:
    CFG = ChcConfig(population_size=12, max_evaluations=400, seed=42)

    def test_monotone_best_and_budget(self):
        rb = toy_rule_base(20, seed=9)
        data = toy_data(100, seed=10)
        result = run(rb, partition(data, 2), self.CFG, True, Engine())
        best_series = [rec.best_fitness for rec in result.history]
        assert all(b >= a for a, b in zip(best_series, best_series[1:]))
        assert result.evaluations <= self.CFG.max_evaluations + self.CFG.population_size
        assert result.rule_base.n_rules <= 20

    def test_all_ones_in_initial_pool(self):
        rb = toy_rule_base(10, seed=11)
        data = toy_data(60, seed=12)
        result = run(rb, partition(data, 1), self.CFG, True, Engine(),
                     record_evaluations=True)
        first_pool = result.evaluated[:self.CFG.population_size]
        assert first_pool[0][0] == bytes([1] * 10)
        assert result.best_fitness >= first_pool[0][1]

    def test_seed_reproducible_across_partitions_and_threads(self):
        rb = toy_rule_base(15, seed=13)
        data = toy_data(90, seed=14)
        outputs = []
        for n_partitions, threads in ((1, 1), (3, 1), (5, 4)):
            result = run(rb, partition(data, n_partitions), self.CFG, True,
                         Engine(threads=threads))
            outputs.append((tuple(result.best_genes.tolist()), result.best_fitness,
                            tuple(r.antecedents for r in result.rule_base.rules)))
        assert outputs[0] == outputs[1] == outputs[2]

    def test_returned_best_is_max_of_evaluated_and_matches_oracle(self):
        rb = toy_rule_base(10, seed=15)
        data = toy_data(50, seed=16)
        cfg = ChcConfig(population_size=10, max_evaluations=300, seed=7)
        result = run(rb, partition(data, 2), cfg, True, Engine(),
                     record_evaluations=True)
        oracle = {}
        for bits in itertools.product((0, 1), repeat=10):
            oracle[bytes(bits)] = oracle_fitness(rb, bits, data, cfg.delta, True)
        finite = [f for _, f in result.evaluated if not math.isinf(f)]
        assert result.best_fitness == max(finite)
        for genes_bytes, fitness in result.evaluated:
            want = oracle[genes_bytes]
            if math.isinf(want):
                assert math.isinf(fitness)
            else:
                assert fitness == pytest.approx(want, abs=1e-12)

    def test_restarts_preserve_best_fitness(self):
        rb = toy_rule_base(10, seed=17)
        data = toy_data(40, seed=18)
        cfg = ChcConfig(population_size=6, max_evaluations=5000, max_restarts=3,
                        phi=0.5, seed=3)
        result = run(rb, partition(data, 1), cfg, True, Engine())
        restarted = [rec for rec in result.history if rec.restarted]
        assert restarted, "configuration should force at least one restart"
        series = [rec.best_fitness for rec in result.history]
        assert all(b >= a for a, b in zip(series, series[1:]))
        assert result.evaluations <= cfg.max_evaluations + cfg.population_size

    def test_selected_rules_keep_canonical_order(self):
        rb = toy_rule_base(8, seed=19)
        data = toy_data(40, seed=20)
        result = run(rb, partition(data, 1), self.CFG, True, Engine())
        indices = [rb.rules.index(r) for r in result.rule_base.rules]
        assert indices == sorted(indices)

    def test_empty_rule_base_rejected(self):
        fp = build_partition(5)
        rb = RuleBase((), fp, numeric_schema(1))
        data = toy_data(10, n_features=1, seed=21)
        with pytest.raises(ValueError):
            run(rb, partition(data, 1), self.CFG, True, Engine())
