"""Serial reference graph algorithms used to evaluate compressed graphs."""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from slimgraph.engine import RunConfig
from slimgraph.graph import EdgeId, Graph, enumerate_triangles
from slimgraph.rng import Stream

UNREACHABLE = -1


@dataclass
class BfsResult:
    root: int
    parent: np.ndarray  # -1 for the root and unreachable vertices
    level: np.ndarray  # UNREACHABLE (-1) when not reached


def bfs(g: Graph, root: int) -> BfsResult:
    """Breadth-first search; neighbors are scanned in increasing id order."""
    if not 0 <= root < g.n:
        raise ValueError("root out of range")
    adj = g.adj_lists
    level = [UNREACHABLE] * g.n
    parent = [-1] * g.n
    level[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        nxt = level[u] + 1
        for w in adj[u]:
            if level[w] == UNREACHABLE:
                level[w] = nxt
                parent[w] = u
                queue.append(w)
    return BfsResult(root, np.array(parent, dtype=np.int64), np.array(level, dtype=np.int64))


def sssp(g: Graph, root: int) -> np.ndarray:
    """Dijkstra distances from ``root``; ``inf`` marks unreachable vertices."""
    if not 0 <= root < g.n:
        raise ValueError("root out of range")
    adj = g.adj_lists
    if g.weighted:
        off = g.offsets.tolist()
        wts = g.weights.tolist()
        wadj = [wts[off[v]:off[v + 1]] for v in range(g.n)]
    else:
        wadj = [[1.0] * len(a) for a in adj]
    dist = [math.inf] * g.n
    dist[root] = 0.0
    heap = [(0.0, root)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, wt in zip(adj[u], wadj[u]):
            nd = d + wt
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return np.array(dist)


def connected_components(g: Graph) -> tuple[int, np.ndarray]:
    """Component count and per-vertex component id (numbered by smallest member)."""
    adj = g.adj_lists
    comp = [-1] * g.n
    count = 0
    for s in range(g.n):
        if comp[s] != -1:
            continue
        comp[s] = count
        stack = [s]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if comp[w] == -1:
                    comp[w] = count
                    stack.append(w)
        count += 1
    return count, np.array(comp, dtype=np.int64)


def triangle_count(g: Graph) -> tuple[int, np.ndarray]:
    per_vertex = np.zeros(g.n, dtype=np.int64)
    tris = enumerate_triangles(g)
    for a, b, c in tris:
        per_vertex[a] += 1
        per_vertex[b] += 1
        per_vertex[c] += 1
    return len(tris), per_vertex


def pagerank(g: Graph, damping: float = 0.85, iterations: int = 100,
             tol: float = 1e-10) -> np.ndarray:
    """Power iteration with uniform teleport; dangling mass spread uniformly."""
    n = g.n
    if n == 0:
        return np.zeros(0)
    deg = g.degrees.astype(np.float64)
    src = np.repeat(np.arange(n), g.degrees)
    dst = g.adjacency
    dangling = deg == 0
    inv = np.zeros(n)
    inv[~dangling] = 1.0 / deg[~dangling]
    rank = np.full(n, 1.0 / n)
    for _ in range(iterations):
        share = rank * inv
        new = np.bincount(dst, weights=share[src], minlength=n)
        new = damping * (new + rank[dangling].sum() / n) + (1.0 - damping) / n
        new /= new.sum()
        delta = np.abs(new - rank).sum()
        rank = new
        if delta < tol:
            break
    return rank


class UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def mst_weight(g: Graph) -> float:
    """Kruskal; minimum spanning forest weight for disconnected graphs."""
    w = g.edge_weights
    order = np.argsort(w, kind="stable")
    edges = g.edge_array[order].tolist()
    wts = w[order].tolist()
    uf = UnionFind(g.n)
    total = 0.0
    for (u, v), wt in zip(edges, wts):
        if uf.union(u, v):
            total += wt
    return total


def greedy_coloring(g: Graph) -> tuple[int, np.ndarray]:
    """First-fit coloring in increasing vertex id."""
    adj = g.adj_lists
    color = [-1] * g.n
    for v in range(g.n):
        used = {color[w] for w in adj[v] if color[w] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return (max(color) + 1 if color else 0), np.array(color, dtype=np.int64)


def greedy_matching(g: Graph) -> tuple[int, list[EdgeId]]:
    """Maximal matching taking edges in increasing EdgeId order."""
    matched = [False] * g.n
    out = []
    for u, v in g.edge_array.tolist():
        if not matched[u] and not matched[v]:
            matched[u] = matched[v] = True
            out.append(EdgeId(u, v))
    return len(out), out


def greedy_mis(g: Graph) -> tuple[int, list[int]]:
    """Maximal independent set taking vertices in increasing id."""
    adj = g.adj_lists
    blocked = [False] * g.n
    out = []
    for v in range(g.n):
        if not blocked[v]:
            out.append(v)
            blocked[v] = True
            for w in adj[v]:
                blocked[w] = True
    return len(out), out


def betweenness(g: Graph) -> np.ndarray:
    """Brandes betweenness, hop-count paths, each unordered pair counted once."""
    adj = g.adj_lists
    n = g.n
    bc = [0.0] * n
    for s in range(n):
        order = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return np.array(bc) / 2.0


def eccentricity(g: Graph, root: int) -> int:
    lv = bfs(g, root).level
    return int(lv.max()) if len(lv) else 0


def diameter_estimate(g: Graph, probes: int, cfg: RunConfig = RunConfig()) -> int:
    """Largest BFS eccentricity over ``probes`` distinct seeded random roots.

    A lower bound on the diameter (of the largest component); with
    ``probes >= n`` every vertex is a root and the value is exact.
    """
    if g.n == 0:
        return 0
    roots = list(range(g.n)) if probes >= g.n else Stream(cfg.seed, "diameter").sample(range(g.n), probes)
    return max(eccentricity(g, r) for r in roots)
