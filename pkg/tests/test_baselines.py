import itertools

import pytest

from qosd import (
    BlownBudgetError,
    BudgetVector,
    Graph,
    QosdInstance,
    WeightFunction,
    build_weights,
    enumerate_feasible_paths,
    make_er_instance,
    oracle_opt,
    run_cc,
    unseparated_pairs,
)

from conftest import single_edge_instance


class TestRunCc:
    def test_diamond_caps_two_edges(self, inst_a):
        report = run_cc(inst_a)
        assert report.budget == BudgetVector([2, 0, 2, 0])
        assert report.norm == 4
        assert report.feasible

    def test_already_separated(self):
        g = Graph(2, [(0, 1)])
        inst = QosdInstance(g, [WeightFunction((2, 3))], [(0, 1)], 2)
        assert run_cc(inst).norm == 0

    def test_single_feasible_path(self):
        inst = single_edge_instance((1, 2, 3), 3, "linear")
        report = run_cc(inst)
        assert report.budget == BudgetVector([2])
        assert report.outer_iterations == 1

    @pytest.mark.parametrize("seed", range(4))
    def test_zero_or_cap_components(self, seed):
        inst = make_er_instance(20, 0.2, 4, 4, "convex", seed=seed)
        report = run_cc(inst)
        assert report.feasible
        for value, cap in zip(report.budget, inst.box):
            assert value in (0, cap)


class TestEnumerateFeasiblePaths:
    def test_diamond_exactly_two(self, inst_a):
        paths = enumerate_feasible_paths(inst_a)
        assert sorted(p.edge_seq for p in paths) == [(0, 1), (2, 3)]

    def test_threshold_one_empty(self):
        # weights are >= 1 so nothing is shorter than T=2 with initial 2
        g = Graph(2, [(0, 1)])
        inst = QosdInstance(g, [WeightFunction((2, 3))], [(0, 1)], 2)
        assert enumerate_feasible_paths(inst) == []

    def test_complete_digraph_two_hops(self):
        nodes = range(4)
        edges = [(u, v) for u in nodes for v in nodes if u != v]
        g = Graph(4, edges)
        weights = build_weights(g, "linear", 3)
        inst = QosdInstance(g, weights, [(0, 1)], 3)
        paths = enumerate_feasible_paths(inst)
        # direct edge plus the two 2-hop routes via nodes 2 and 3
        assert len(paths) == 3

    def test_limit_enforced(self):
        nodes = range(7)
        edges = [(u, v) for u in nodes for v in nodes if u != v]
        g = Graph(7, edges)
        weights = build_weights(g, "linear", 7)
        inst = QosdInstance(g, weights, [(0, 1)], 7)
        with pytest.raises(BlownBudgetError):
            enumerate_feasible_paths(inst, limit=10)

    def test_matches_unpruned_bruteforce(self):
        for seed in range(6):
            inst = make_er_instance(6, 0.45, 4, 3, "linear", seed=seed, validate_box=False)
            expected = set()
            for idx, (s, t) in enumerate(inst.pairs):
                for size in range(2, inst.graph.n + 1):
                    for perm in itertools.permutations(range(inst.graph.n), size):
                        if perm[0] != s or perm[-1] != t:
                            continue
                        edge_ids = []
                        ok = True
                        for a, b in zip(perm, perm[1:]):
                            for v, ei in inst.graph.out_adj[a]:
                                if v == b:
                                    edge_ids.append(ei)
                                    break
                            else:
                                ok = False
                                break
                        if not ok:
                            continue
                        initial = sum(inst.weights[e].table[0] for e in edge_ids)
                        if initial < inst.threshold:
                            expected.add((idx, tuple(edge_ids)))
            got = {(p.pair_index, p.edge_seq) for p in enumerate_feasible_paths(inst)}
            assert got == expected

    def test_hop_bound_respected(self):
        for seed in range(4):
            inst = make_er_instance(10, 0.3, 5, 3, "cutting", seed=seed)
            for p in enumerate_feasible_paths(inst):
                assert len(p.edge_seq) <= inst.hop_bound


class TestOracle:
    def test_diamond_opt_two(self, inst_a):
        result = oracle_opt(inst_a)
        assert result.opt_norm == 2
        assert result.feasible_paths == 2
        assert unseparated_pairs(inst_a, result.witness) == []

    def test_single_edge_forced_saturation(self):
        inst = single_edge_instance((1, 2, 3), 3, "linear")
        assert oracle_opt(inst).opt_norm == 2

    def test_already_separated(self):
        g = Graph(2, [(0, 1)])
        inst = QosdInstance(g, [WeightFunction((2, 3))], [(0, 1)], 2)
        result = oracle_opt(inst)
        assert result.opt_norm == 0
        assert result.feasible_paths == 0

    def test_witness_minimal_by_exhaustion(self):
        # cross-check the lattice search against direct enumeration
        for seed in range(4):
            inst = make_er_instance(7, 0.35, 3, 2, "linear", seed=seed)
            result = oracle_opt(inst)
            paths = enumerate_feasible_paths(inst)
            support = sorted({e for p in paths for e in p.edge_seq})
            found = None
            for norm in range(0, result.opt_norm + 1):
                for combo in _vectors_of_norm(support, inst.box, norm):
                    x = [0] * inst.graph.m
                    for e, v in combo.items():
                        x[e] = v
                    if not unseparated_pairs(inst, BudgetVector(x)):
                        found = norm
                        break
                if found is not None:
                    break
            assert found == result.opt_norm

    def test_node_limit(self):
        inst = make_er_instance(8, 0.4, 4, 3, "linear", seed=1)
        with pytest.raises(BlownBudgetError):
            oracle_opt(inst, node_limit=3)


def _vectors_of_norm(support, box, norm):
    def rec(idx, remaining, acc):
        if idx == len(support):
            if remaining == 0:
                yield dict(acc)
            return
        e = support[idx]
        for v in range(0, min(box[e], remaining) + 1):
            acc[e] = v
            yield from rec(idx + 1, remaining - v, acc)
            acc[e] = 0

    yield from rec(0, norm, {})
