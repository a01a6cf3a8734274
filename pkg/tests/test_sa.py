import math
import random
from fractions import Fraction

import pytest

from qosd import (
    BudgetVector,
    GammaZeroError,
    Graph,
    QosdInstance,
    SaConfig,
    build_sp_tree,
    build_weights,
    estimate_B,
    greedy_chunk,
    make_er_instance,
    run_sa,
    sample_count,
    sample_path,
    unseparated_pairs,
)
from qosd.sa import SampledPath, _derived_rng

from conftest import diamond_instance


class TestBuildSpTree:
    def test_diamond_parents(self, inst_a):
        tree = build_sp_tree(inst_a, BudgetVector.zeros(4), 3)
        # ties at node 0 resolve to the lower next-hop id
        assert tree[0] == 1
        assert tree[1] == 3
        assert tree[2] == 3
        assert tree[3] is None

    def test_sink_without_incoming(self, inst_a):
        tree = build_sp_tree(inst_a, BudgetVector.zeros(4), 0)
        assert tree == [None, None, None, None]

    def test_recomputed_after_budget(self, inst_a):
        tree = build_sp_tree(inst_a, BudgetVector([2, 0, 0, 0]), 3)
        assert tree[0] == 2  # heavy (0,1) flips the next hop


class TestSamplePath:
    def test_diamond_two_outcomes(self, inst_a):
        trees = {3: build_sp_tree(inst_a, BudgetVector.zeros(4), 3)}
        seen = {}
        for i in range(200):
            sp = sample_path(
                inst_a, BudgetVector.zeros(4), trees, 0.8, random.Random(i)
            )
            assert sp.feasible
            seen[sp.path.edge_seq] = sp.rho
        assert seen == {(0, 1): 0.8, (2, 3): pytest.approx(0.2)}

    def test_empirical_branch_frequency(self, inst_a):
        trees = {3: build_sp_tree(inst_a, BudgetVector.zeros(4), 3)}
        n = 20_000
        hits = 0
        for i in range(n):
            sp = sample_path(
                inst_a, BudgetVector.zeros(4), trees, 0.8, _derived_rng(99, 0, 0, i)
            )
            hits += sp.path.edge_seq == (0, 1)
        sigma = math.sqrt(0.8 * 0.2 / n)
        assert abs(hits / n - 0.8) <= 3 * sigma

    def test_truncated_walk_infeasible(self, inst_a):
        # budget on both branch edges pushes current length to T mid-walk
        x = BudgetVector([2, 0, 2, 0])
        trees = {3: build_sp_tree(inst_a, x, 3)}
        for i in range(50):
            sp = sample_path(inst_a, x, trees, 0.8, random.Random(i))
            assert not sp.feasible
            assert len(sp.path.edge_seq) == 1  # stopped after one heavy step

    def test_dead_end_infeasible(self):
        # 0 -> 1 -> 2 with a trap edge 1 -> 3 (3 has no exits), pair (0, 2)
        g = Graph(4, [(0, 1), (1, 2), (1, 3)])
        weights = build_weights(g, "linear", 3)
        inst = QosdInstance(g, weights, [(0, 2)], 3)
        trees = {2: build_sp_tree(inst, BudgetVector.zeros(3), 2)}
        outcomes = set()
        for i in range(300):
            sp = sample_path(inst, BudgetVector.zeros(3), trees, 0.8, random.Random(i))
            outcomes.add((sp.path.node_seq, sp.feasible))
        assert ((0, 1, 2), True) in outcomes
        assert ((0, 1, 3), False) in outcomes  # dead end contributes zero

    def test_rho_lower_bound_per_sample(self):
        alpha = 0.8
        for seed in range(5):
            inst = make_er_instance(15, 0.3, 4, 3, "linear", seed=seed)
            x = BudgetVector.zeros(inst.graph.m)
            trees = {t: build_sp_tree(inst, x, t) for _, t in inst.pairs}
            d = inst.graph.max_out_degree
            bound = (1.0 / inst.k) * ((1 - alpha) / max(d - 1, 1)) ** inst.hop_bound
            for i in range(300):
                sp = sample_path(inst, x, trees, alpha, random.Random(i))
                assert sp.rho > 0
                if sp.feasible:
                    assert sp.rho >= bound * (1 - 1e-12)

    def test_probability_accounting_exhaustive(self):
        # the probabilities of all walk outcomes for one pair sum to one
        for inst, pair_index in [
            (diamond_instance(), 0),
            (_k4_instance(), 0),
        ]:
            x = BudgetVector.zeros(inst.graph.m)
            trees = {t: build_sp_tree(inst, x, t) for _, t in inst.pairs}
            total = _walk_tree_mass(inst, x, trees, pair_index, alpha=0.8)
            assert total == pytest.approx(1.0, abs=1e-12)


def _k4_instance():
    nodes = range(4)
    edges = [(u, v) for u in nodes for v in nodes if u != v]
    g = Graph(4, edges)
    return QosdInstance(g, build_weights(g, "linear", 3), [(0, 3)], 3)


def _walk_tree_mass(inst, x, trees, pair_index, alpha):
    """Independent expansion of every walk outcome and its probability."""
    from qosd.pathcore import edge_lengths

    lengths = edge_lengths(inst, x)
    s, t = inst.pairs[pair_index]
    tree = trees[t]
    total = 0.0

    def expand(u, visited, current, prob):
        nonlocal total
        if u == t or current >= inst.threshold:
            total += prob
            return
        avail = [(v, ei) for v, ei in inst.graph.out_adj[u] if v not in visited]
        if not avail:
            total += prob
            return
        if len(avail) == 1:
            probs = [1.0]
        else:
            parent = tree[u]
            if parent is not None and any(v == parent for v, _ in avail):
                other = (1 - alpha) / (len(avail) - 1)
                probs = [alpha if v == parent else other for v, _ in avail]
            else:
                probs = [1.0 / len(avail)] * len(avail)
        for (v, ei), p in zip(avail, probs):
            expand(v, visited | {v}, current + lengths[ei], prob * p)

    expand(s, {s}, 0, 1.0)
    return total


class TestEstimateB:
    def test_exact_arithmetic_single_sample(self, inst_a):
        from qosd import Path

        sp = SampledPath(Path((0, 2, 3), (2, 3), 2, 0), 0.2, 0, True)
        assert estimate_B(inst_a, [sp], BudgetVector.zeros(4)) == pytest.approx(10.0)

    def test_all_infeasible_gives_zero(self, inst_a):
        from qosd import Path

        sp = SampledPath(Path((0, 1), (0,), 1, 0), 0.8, 0, False)
        assert estimate_B(inst_a, [sp], BudgetVector.zeros(4)) == 0.0

    def test_empty_sample_set_rejected(self, inst_a):
        with pytest.raises(ValueError):
            estimate_B(inst_a, [], BudgetVector.zeros(4))

    def test_unbiased_at_zero_budget(self, inst_a):
        # exact B = 4 on the diamond; R/rho is 2.5 (p=.8) or 10 (p=.2)
        x = BudgetVector.zeros(4)
        trees = {3: build_sp_tree(inst_a, x, 3)}
        samples = [
            sample_path(inst_a, x, trees, 0.8, _derived_rng(7, 0, 0, i))
            for i in range(20_000)
        ]
        est = estimate_B(inst_a, samples, x)
        values = [2.5, 10.0]
        mean, var = 4.0, 0.8 * 2.5**2 + 0.2 * 10.0**2 - 16.0
        se = math.sqrt(var / len(samples))
        assert abs(est - mean) <= 3 * se


class TestSampleCount:
    def test_frozen_reference_value(self, inst_a):
        # independently evaluated closed form (mpmath, 40 digits): 34547.42...
        assert sample_count(inst_a, 1, 0.5, 0.5, gamma=Fraction(1)) == 34548

    def test_blows_up_as_gamma_vanishes(self, inst_a):
        counts = [
            sample_count(inst_a, 1, 0.5, 0.5, gamma=g)
            for g in (0.5, 0.1, 0.01, 0.001)
        ]
        assert counts == sorted(counts)
        assert counts[-1] > 100 * counts[0]

    def test_gamma_zero_unavailable(self, inst_a):
        with pytest.raises(GammaZeroError):
            sample_count(inst_a, 1, 0.5, 0.5, gamma=0)

    def test_practical_default_scales_with_pairs(self):
        inst = make_er_instance(60, 0.15, 3, 100, "linear", seed=0)
        report = run_sa(inst, SaConfig(seed=0))
        assert report.extras["samples_per_round"] == 1000


class TestGreedyChunk:
    def test_diamond_places_units_on_both_branches(self, inst_a):
        x = BudgetVector.zeros(4)
        trees = {3: build_sp_tree(inst_a, x, 3)}
        samples = [
            sample_path(inst_a, x, trees, 0.8, _derived_rng(3, 0, 0, i))
            for i in range(400)
        ]
        v = greedy_chunk(inst_a, samples, x, q=2)
        # matches exact-B greedy: one unit on the first edge of each route
        assert v == BudgetVector([1, 0, 1, 0])

    def test_zero_budget_chunk(self, inst_a):
        x = BudgetVector.zeros(4)
        trees = {3: build_sp_tree(inst_a, x, 3)}
        samples = [sample_path(inst_a, x, trees, 0.8, random.Random(0))]
        assert greedy_chunk(inst_a, samples, x, q=0).norm == 0

    def test_blocked_samples_give_zero(self, inst_a):
        x = BudgetVector([1, 0, 1, 0])
        trees = {3: build_sp_tree(inst_a, x, 3)}
        samples = [
            sample_path(inst_a, x, trees, 0.8, random.Random(i)) for i in range(50)
        ]
        assert greedy_chunk(inst_a, samples, x, q=3).norm == 0


class TestRunSa:
    def test_diamond_optimal_mostly(self, inst_a):
        hits = 0
        for seed in range(40):
            report = run_sa(inst_a, SaConfig(seed=seed))
            assert report.feasible
            hits += report.norm == 2
        assert hits >= 36  # >= 90%

    def test_cutting_uses_binary_components(self):
        inst = make_er_instance(20, 0.2, 4, 4, "cutting", seed=3)
        report = run_sa(inst, SaConfig(seed=1))
        assert report.feasible
        assert all(v in (0, 1) for v in report.budget)

    def test_escalation_and_fallback(self, inst_a):
        # pair (3, 0) has no path; master 31671 makes every round-0 walk
        # draw it, so the round escalates three times and falls back
        inst2 = QosdInstance(inst_a.graph, inst_a.weights, [(0, 3), (3, 0)], 3)
        report = run_sa(inst2, SaConfig(seed=31671, samples_per_round=1))
        assert report.feasible
        assert report.extras["escalations"] >= 3
        assert report.extras["fallbacks"] >= 1

    def test_theoretical_mode_smoke(self, inst_a):
        report = run_sa(
            inst_a, SaConfig(seed=1, sample_mode="theoretical", epsilon=0.9, delta=0.9)
        )
        assert report.feasible
        assert report.extras["samples_per_round"] == 15973

    def test_threads_identical_result(self):
        inst = make_er_instance(25, 0.2, 4, 5, "linear", seed=8)
        a = run_sa(inst, SaConfig(seed=5), threads=1)
        b = run_sa(inst, SaConfig(seed=5), threads=4)
        assert a.budget == b.budget

    def test_progress_bounded_by_box(self):
        for seed in range(4):
            inst = make_er_instance(15, 0.3, 4, 3, "convex", seed=seed)
            report = run_sa(inst, SaConfig(seed=seed))
            assert report.feasible
            assert report.budget.within_box(inst.box)
            assert unseparated_pairs(inst, report.budget) == []
