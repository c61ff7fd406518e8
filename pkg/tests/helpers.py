"""Graph generators and brute-force oracles shared by the test modules."""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from slimgraph import Graph


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int, weights=None) -> Graph:
    edges = list(itertools.combinations(range(n), 2))
    return Graph.from_edges(n, edges, weights)


def star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def two_triangles() -> Graph:
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def gnp(n: int, p: float, seed: int, weighted: bool = False, distinct: bool = False) -> Graph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    w = None
    if distinct:
        w = rng.permutation(len(edges)).astype(np.float64) + 1.0
    elif weighted:
        w = rng.uniform(0.5, 5.0, len(edges))
    return Graph.from_edges(n, edges, w)


def gnm(n: int, avg_degree: float, seed: int) -> Graph:
    """Sparse random graph with about ``n * avg_degree / 2`` edges."""
    rng = np.random.default_rng(seed)
    m = int(n * avg_degree / 2)
    u = rng.integers(0, n, size=2 * m)
    v = rng.integers(0, n, size=2 * m)
    pairs = np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(pairs, axis=0)
    pairs = pairs[rng.permutation(len(pairs))[:m]]
    return Graph.from_edges(n, pairs)


def random_connected(n: int, extra: float, seed: int, weighted: bool = False) -> Graph:
    """Random spanning tree plus about ``extra * n`` extra edges (triangle rich)."""
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    for _ in range(int(extra * n)):
        a = int(rng.integers(0, n))
        # close a triangle with a neighbor of a neighbor most of the time
        b = int(rng.integers(0, n))
        edges.append((a, b))
        if rng.random() < 0.7:
            edges.append((b, int(rng.integers(0, n))))
    w = rng.uniform(0.5, 5.0, len(edges)) if weighted else None
    return Graph.from_edges(n, edges, w)


def edge_set(g: Graph) -> set[tuple[int, int]]:
    return {tuple(e) for e in g.edge_array.tolist()}


def brute_triangles(g: Graph) -> list[tuple[int, int, int]]:
    s = g.adj_sets
    return [t for t in itertools.combinations(range(g.n), 3)
            if t[1] in s[t[0]] and t[2] in s[t[0]] and t[2] in s[t[1]]]


def brute_components(g: Graph) -> int:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for u, v in g.edge_array.tolist():
        parent[find(u)] = find(v)
    return len({find(v) for v in range(g.n)})


def bfs_levels(g: Graph, root: int) -> list[int]:
    level = [-1] * g.n
    level[root] = 0
    q = deque([root])
    while q:
        u = q.popleft()
        for w in g.adj_lists[u]:
            if level[w] < 0:
                level[w] = level[u] + 1
                q.append(w)
    return level


def all_shortest_paths(g: Graph, s: int, t: int) -> list[list[int]]:
    """Every shortest s-t path by exhaustive layered expansion."""
    dist = bfs_levels(g, s)
    if dist[t] < 0:
        return []
    paths = [[s]]
    for _ in range(dist[t]):
        paths = [p + [w] for p in paths for w in g.adj_lists[p[-1]] if dist[w] == len(p)]
    return [p for p in paths if p[-1] == t]


def brute_betweenness(g: Graph) -> np.ndarray:
    bc = np.zeros(g.n)
    for s, t in itertools.combinations(range(g.n), 2):
        paths = all_shortest_paths(g, s, t)
        for p in paths:
            for v in p[1:-1]:
                bc[v] += 1.0 / len(paths)
    return bc


def brute_mst(g: Graph) -> float:
    """Minimum spanning forest weight by enumerating all acyclic edge subsets of size n - c."""
    edges = g.edge_array.tolist()
    w = g.edge_weights.tolist()
    target = g.n - brute_components(g)
    best = float("inf")
    for subset in itertools.combinations(range(len(edges)), target):
        parent = list(range(g.n))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for i in subset:
            a, b = find(edges[i][0]), find(edges[i][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            best = min(best, sum(w[i] for i in subset))
    return 0.0 if target == 0 else best
