import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import complete, cycle, gnm, path, two_triangles
from slimgraph import EdgeId, Graph
from slimgraph.algorithms import bfs
from slimgraph.engine import RunConfig
from slimgraph.metrics import (ALGORITHMS, MetricReport, compare_run, critical_edge_preservation,
                               critical_edges, kl_divergence, reordered_neighbors,
                               reordered_pairs, scalar_accuracy)
from slimgraph.schemes import triangle_reduce

vectors = st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=25)
# integers keep the rescalings below strictly monotone in floating point
int_vectors = st.lists(st.integers(-100, 100), min_size=2, max_size=25)


class TestScalar:
    @pytest.mark.parametrize("a,b,expected", [(10, 10, 1.0), (4, 3, 0.75), (-4, 2, 0.5)])
    def test_examples(self, a, b, expected):
        assert scalar_accuracy(a, b) == expected

    def test_zero_original_undefined(self):
        assert scalar_accuracy(0, 5) is None


class TestReordered:
    def test_pairs(self):
        assert reordered_pairs([1, 2, 3], [1, 2, 3]) == 0
        assert reordered_pairs([1, 2, 3], [3, 2, 1]) == 1.0
        assert reordered_pairs([1, 2, 3], [2, 1, 3]) == pytest.approx(1 / 3)

    def test_ties_do_not_count(self):
        assert reordered_pairs([1, 1, 2], [5, 4, 3]) == pytest.approx(2 / 3)
        assert reordered_pairs([1, 2], [np.inf, np.inf]) == 0

    def test_neighbors(self):
        g = path(3)
        assert reordered_neighbors(g, [1, 2, 3], [1, 2, 3]) == 0
        assert reordered_neighbors(g, [1, 2, 3], [3, 2, 1]) == 1.0
        assert reordered_neighbors(g, [1, 2, 3], [2, 1, 3]) == 0.5
        assert reordered_neighbors(Graph.empty(3), [1, 2, 3], [3, 2, 1]) is None

    @given(vectors)
    def test_identity_is_zero(self, a):
        assert reordered_pairs(a, a) == 0

    @settings(max_examples=100)
    @given(int_vectors, st.data())
    def test_monotone_rescaling_invariance(self, a, data):
        b = data.draw(st.lists(st.integers(-100, 100), min_size=len(a), max_size=len(a)))
        a, b = np.array(a), np.array(b)
        base = reordered_pairs(a, b)
        assert reordered_pairs(np.exp(a / 50.0), 3.0 * b + 1) == base
        g = path(len(a))
        assert reordered_neighbors(g, np.exp(a / 50.0), 3.0 * b + 1) == reordered_neighbors(g, a, b)

    def test_brute_force(self):
        rng = np.random.default_rng(0)
        a, b = rng.integers(0, 5, 30), rng.integers(0, 5, 30)
        flips = sum((a[i] - a[j]) * (b[i] - b[j]) < 0 for i in range(30) for j in range(i + 1, 30))
        assert reordered_pairs(a, b) == pytest.approx(flips / (30 * 29 / 2))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            reordered_pairs([1, 2], [1, 2, 3])


class TestKl:
    def test_examples(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.5 + 0.5 * np.log2(2 / 3))

    def test_missing_support_undefined(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) is None
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)

    @settings(max_examples=100)
    @given(st.lists(st.floats(0.01, 1), min_size=2, max_size=10), st.data())
    def test_nonnegative_and_zero_iff_equal(self, p, data):
        q = data.draw(st.lists(st.floats(0.01, 1), min_size=len(p), max_size=len(p)))
        p, q = np.array(p) / sum(p), np.array(q) / sum(q)
        kl = kl_divergence(p, q)
        assert kl >= 0
        if np.allclose(p, q, atol=1e-12, rtol=0):
            assert kl < 1e-9
        else:
            assert kl > 0
        assert kl_divergence(p, p) == 0


class TestCriticalEdges:
    def test_path_from_end(self):
        assert critical_edges(path(3), 0) == {EdgeId(0, 1), EdgeId(1, 2)}

    def test_k3(self):
        assert critical_edges(complete(3), 0) == {EdgeId(0, 1), EdgeId(0, 2)}

    def test_c4(self):
        assert critical_edges(cycle(4), 0) == set(cycle(4).edges())

    def test_superset_of_randomized_bfs_trees(self):
        rnd = random.Random(1)
        for seed in range(10):
            g = gnm(30, 3, seed)
            crit = critical_edges(g, 0)
            level = bfs(g, 0).level
            for _ in range(100):
                # a random BFS tree: any same-distance parent choice is valid
                for v in range(g.n):
                    if level[v] > 0:
                        parents = [u for u in g.adj_lists[v] if level[u] == level[v] - 1]
                        assert EdgeId.of(rnd.choice(parents), v) in crit

    def test_preservation(self):
        g = cycle(4)
        assert critical_edge_preservation(g, g, 0) == 1.0
        assert critical_edge_preservation(g, Graph.empty(4), 0) == 0.0
        assert critical_edge_preservation(Graph.empty(3), Graph.empty(3), 0) is None


class TestReport:
    def test_serialization(self):
        r = MetricReport("cc", {"scheme": "uniform", "p": 0.5, "seed": 1})
        r.add("A_S", 0.5)
        r.add("KL", None)
        r.add("X", float("inf"))
        assert r["KL"] is None and r["X"] is None
        d = json.loads(r.to_json())
        assert d["metrics"][1] == {"name": "KL", "value": None}
        assert r.to_csv().splitlines() == ["metric,scheme,param,value", "A_S,uniform,p=0.5,0.5",
                                           "KL,uniform,p=0.5,undefined", "X,uniform,p=0.5,undefined"]
        with pytest.raises(ValueError):
            r.add("A_S", 1.0)


CORPUS = [path(5), cycle(6), complete(5), two_triangles(), gnm(60, 4, 1), Graph.empty(4),
          Graph.from_edges(5, [(0, 1), (1, 2)], [2.0, 0.5])]


class TestCompareRun:
    @pytest.mark.parametrize("algo", sorted(ALGORITHMS))
    @pytest.mark.parametrize("gi", range(len(CORPUS)))
    def test_identity(self, algo, gi):
        g = CORPUS[gi]
        report = compare_run(g, g, algo, {"root": 0, "probes": 4})
        for e in report.entries:
            if e.value is None:
                continue
            expected = 1.0 if e.name in ("A_S", "critical_edge_preservation") else 0.0
            assert e.value == expected, (e.name, e.value)

    def test_examples(self):
        g = two_triangles()
        assert compare_run(g, g, "cc")["A_S"] == 1.0
        assert compare_run(g, g, "pagerank")["KL"] == 0.0
        k3 = complete(3)
        reduced = triangle_reduce(k3, 1.0, 1, "edge_once", RunConfig(seed=0))[0]
        assert compare_run(k3, reduced, "cc")["A_S"] == 1.0

    def test_different_vertex_sets_undefined(self):
        g = complete(4)
        small = complete(3)
        r = compare_run(g, small, "pagerank")
        assert r["KL"] is None and r["A_RE"] is None
        assert compare_run(g, small, "bfs")["critical_edge_preservation"] is None
        assert compare_run(g, g, "pagerank", same_vertex_set=False)["KL"] is None
        assert compare_run(g, small, "tc")["A_S"] == 0.25

    def test_unknown(self):
        with pytest.raises(ValueError):
            compare_run(path(2), path(2), "nope")
