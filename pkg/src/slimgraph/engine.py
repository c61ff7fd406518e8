"""Kernel execution engine and vertex-to-subgraph mappings.

A kernel is a callable ``kernel(element, ctx)`` run once per graph element.
It reads local structure from ``element`` and ``ctx.graph`` and records its
decisions through ``ctx`` (``delete_edge``, ``delete_vertex``, ``reweight``).
Nothing touches the graph until :func:`commit`.
"""
from __future__ import annotations

import heapq
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from slimgraph.graph import EdgeId, Graph, Triangle, apply_deletions, enumerate_triangles
from slimgraph.rng import Stream, first_u64, first_uniforms


@dataclass(frozen=True)
class RunConfig:
    """``deterministic`` forces serial execution in canonical element order."""

    seed: int = 0
    deterministic: bool = True
    threads: int | None = None

    def worker_count(self) -> int:
        if self.deterministic:
            return 1
        if self.threads:
            return max(1, self.threads)
        env = os.environ.get("SLIMGRAPH_THREADS")
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1


@dataclass
class DeletionBuffer:
    dead_edges: set[EdgeId] = field(default_factory=set)
    dead_vertices: set[int] = field(default_factory=set)
    new_weights: dict[EdgeId, float] = field(default_factory=dict)
    instances: int = 0

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def delete_edge(self, u: int, v: int) -> bool:
        """Insert edge ``{u, v}``; False if it was already pending."""
        e = EdgeId.of(u, v)
        with self._lock:
            if e in self.dead_edges:
                return False
            self.dead_edges.add(e)
            return True

    def delete_vertex(self, v: int) -> bool:
        with self._lock:
            if v in self.dead_vertices:
                return False
            self.dead_vertices.add(v)
            return True

    def reweight(self, u: int, v: int, w: float) -> None:
        with self._lock:
            self.new_weights[EdgeId.of(u, v)] = w

    def clear(self) -> None:
        with self._lock:
            self.dead_edges.clear()
            self.dead_vertices.clear()
            self.new_weights.clear()
            self.instances = 0

    def __bool__(self) -> bool:
        return bool(self.dead_edges or self.dead_vertices or self.new_weights)


@dataclass
class EdgeMarkSet:
    """Edge-Once "considered" flags."""

    considered: set[EdgeId] = field(default_factory=set)

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def test_and_set(self, e: EdgeId) -> bool:
        """Mark ``e``; True only for the first call on ``e``."""
        with self._lock:
            if e in self.considered:
                return False
            self.considered.add(e)
            return True

    def __contains__(self, e: object) -> bool:
        return e in self.considered


class KernelContext:
    """Per-instance view of the run state (the ``SG`` object of a kernel)."""

    __slots__ = ("graph", "buffer", "marks", "rng", "_atomic")

    def __init__(self, graph: Graph, buffer: DeletionBuffer, marks: EdgeMarkSet,
                 rng: Stream, atomic) -> None:
        self.graph = graph
        self.buffer = buffer
        self.marks = marks
        self.rng = rng
        self._atomic = atomic

    def delete_edge(self, u: int, v: int) -> bool:
        return self.buffer.delete_edge(u, v)

    def delete_vertex(self, v: int) -> bool:
        return self.buffer.delete_vertex(v)

    def reweight(self, u: int, v: int, w: float) -> None:
        self.buffer.reweight(u, v, w)

    def is_deleted(self, e: EdgeId) -> bool:
        return e in self.buffer.dead_edges

    def atomic(self):
        """Region executed without interleaving other kernel instances."""
        return self._atomic


class EdgeView(NamedTuple):
    u: int
    v: int
    weight: float
    deg_u: int
    deg_v: int

    @property
    def id(self) -> EdgeId:
        return EdgeId(self.u, self.v)


class VertexView(NamedTuple):
    v: int
    deg: int


class SubgraphView(NamedTuple):
    id: int
    vertices: list[int]
    intra_edges: list[EdgeId]
    # (inside, outside) pairs, mirroring SG.out_edges
    out_edges: list[tuple[int, int]]


Kernel = Callable[[object, KernelContext], None]


def _execute(g: Graph, elements: Sequence, keys: Callable[[object], tuple[int, ...]],
             kernel: Kernel, purpose: str, cfg: RunConfig,
             buf: DeletionBuffer | None = None, marks: EdgeMarkSet | None = None) -> DeletionBuffer:
    buf = DeletionBuffer() if buf is None else buf
    marks = EdgeMarkSet() if marks is None else marks
    workers = cfg.worker_count()
    if workers == 1:
        atomic = nullcontext()
        for el in elements:
            kernel(el, KernelContext(g, buf, marks, Stream(cfg.seed, purpose, *keys(el)), atomic))
        buf.instances += len(elements)
        return buf

    atomic_lock = threading.RLock()

    def run_chunk(chunk: Sequence) -> None:
        for el in chunk:
            kernel(el, KernelContext(g, buf, marks, Stream(cfg.seed, purpose, *keys(el)), atomic_lock))

    size = max(1, len(elements) // (workers * 4))
    chunks = [elements[i:i + size] for i in range(0, len(elements), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for f in [pool.submit(run_chunk, c) for c in chunks]:
            f.result()
    buf.instances += len(elements)
    return buf


def run_edge_kernels(g: Graph, kernel: Kernel, cfg: RunConfig = RunConfig(),
                     purpose: str = "edge") -> DeletionBuffer:
    """Invoke ``kernel(EdgeView, ctx)`` once per undirected edge."""
    deg = g.degrees.tolist()
    views = [EdgeView(u, v, w, deg[u], deg[v])
             for (u, v), w in zip(g.edge_array.tolist(), g.edge_weights.tolist())]
    return _execute(g, views, lambda e: (e.u, e.v), kernel, purpose, cfg)


def edge_draws(g: Graph, cfg: RunConfig, purpose: str = "edge") -> np.ndarray:
    """First uniform of every edge's stream, in canonical edge order.

    Equals ``ctx.rng.random()`` on the first call inside ``run_edge_kernels``
    with the same ``purpose``, so a one-draw edge kernel can be evaluated for
    all edges at once.
    """
    return first_uniforms(cfg.seed, purpose, g.edge_array)


def run_triangle_kernels(g: Graph, kernel: Kernel, cfg: RunConfig = RunConfig(),
                         purpose: str = "triangle", marks: EdgeMarkSet | None = None,
                         triangles: list[Triangle] | None = None) -> DeletionBuffer:
    """Invoke ``kernel(Triangle, ctx)`` once per triangle of ``g``."""
    tris = enumerate_triangles(g) if triangles is None else triangles
    return _execute(g, tris, lambda t: t, kernel, purpose, cfg, marks=marks)


def run_vertex_kernels(g: Graph, kernel: Kernel, cfg: RunConfig = RunConfig(),
                       purpose: str = "vertex") -> DeletionBuffer:
    deg = g.degrees.tolist()
    views = [VertexView(v, deg[v]) for v in range(g.n)]
    return _execute(g, views, lambda x: (x.v,), kernel, purpose, cfg)


@dataclass
class VertexMapping:
    """Total map vertex -> subgraph id, ids dense in ``[0, subgraph_count)``."""

    subgraph_of: np.ndarray
    subgraph_count: int
    centers: list[int] | None = None

    def members(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.subgraph_count)]
        for v, s in enumerate(self.subgraph_of.tolist()):
            groups[s].append(v)
        return groups

    @classmethod
    def from_labels(cls, labels: Sequence[int], centers: dict[int, int] | None = None) -> "VertexMapping":
        """Relabel arbitrary labels densely, ordered by each group's smallest vertex."""
        dense: dict[int, int] = {}
        out = np.empty(len(labels), dtype=np.int64)
        for v, lab in enumerate(labels):
            if lab not in dense:
                dense[lab] = len(dense)
            out[v] = dense[lab]
        cs = None
        if centers is not None:
            cs = [0] * len(dense)
            for lab, i in dense.items():
                cs[i] = centers[lab]
        return cls(out, len(dense), cs)

    @classmethod
    def singletons(cls, n: int) -> "VertexMapping":
        return cls(np.arange(n, dtype=np.int64), n, list(range(n)))


def subgraph_views(g: Graph, mapping: VertexMapping) -> list[SubgraphView]:
    if len(mapping.subgraph_of) != g.n:
        raise ValueError("mapping must cover every vertex")
    sub = mapping.subgraph_of.tolist()
    members = mapping.members()
    intra: list[list[EdgeId]] = [[] for _ in range(mapping.subgraph_count)]
    out: list[list[tuple[int, int]]] = [[] for _ in range(mapping.subgraph_count)]
    for u, v in g.edge_array.tolist():
        if sub[u] == sub[v]:
            intra[sub[u]].append(EdgeId(u, v))
        else:
            out[sub[u]].append((u, v))
            out[sub[v]].append((v, u))
    for lst in out:
        lst.sort()
    return [SubgraphView(i, members[i], intra[i], out[i]) for i in range(mapping.subgraph_count)]


def run_subgraph_kernels(g: Graph, mapping: VertexMapping, kernel: Kernel,
                         cfg: RunConfig = RunConfig(), purpose: str = "subgraph") -> DeletionBuffer:
    """Invoke ``kernel(SubgraphView, ctx)`` once per subgraph, by subgraph id."""
    views = subgraph_views(g, mapping)
    return _execute(g, views, lambda s: (s.id,), kernel, purpose, cfg)


def commit(g: Graph, buf: DeletionBuffer, *, compact: bool = False):
    """Materialize pending decisions into a new graph and clear ``buf``."""
    weights = {e: w for e, w in buf.new_weights.items() if e not in buf.dead_edges}
    out = apply_deletions(g, buf.dead_edges, buf.dead_vertices, compact=compact,
                          new_weights=weights or None)
    buf.clear()
    return out


# ----------------------------------------------------------------------
# mappings


def build_ldd_mapping(g: Graph, k: float, cfg: RunConfig = RunConfig(), *,
                      rate: float | None = None, shifts: np.ndarray | None = None) -> VertexMapping:
    """Low-diameter decomposition by exponentially shifted shortest paths.

    Every vertex ``v`` draws ``shift_v ~ Exp(rate)`` (``rate = 1/k`` unless
    overridden); vertex ``u`` joins the center ``v`` minimizing
    ``dist(v, u) - shift_v``, ties to the smaller center id. One multi-source
    Dijkstra pass over unit-length edges computes all assignments, so every
    cluster is connected and contains its center.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = g.n
    if shifts is None:
        beta = 1.0 / k if rate is None else rate
        u = first_uniforms(cfg.seed, "ldd-shift", np.arange(n))
        shifts = -np.log1p(-u) / beta
    shifts = np.asarray(shifts, dtype=np.float64)
    adj = g.adj_lists
    best = [(-float(s), v) for v, s in enumerate(shifts.tolist())]
    heap = [(key, v, v) for key, v in best]
    heapq.heapify(heap)
    done = [False] * n
    center = [-1] * n
    shift = shifts.tolist()
    while heap:
        key, c, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        center[u] = c
        d = key + shift[c]
        for w in adj[u]:
            if done[w]:
                continue
            cand = (d + 1 - shift[c], c)
            if cand < best[w]:
                best[w] = cand
                heapq.heappush(heap, (cand[0], c, w))
    return VertexMapping.from_labels(center, centers={c: c for c in set(center)})


def _closed_weights(adj: list[list[int]], members: list[int]) -> dict[int, int]:
    w: dict[int, int] = {}
    for a in members:
        w[a] = w.get(a, 0) + 1
        for x in adj[a]:
            w[x] = w.get(x, 0) + 1
    return w


def generalized_jaccard(a: dict[int, int], b: dict[int, int]) -> float:
    """sum(min) / sum(max) over the union of supports."""
    num = 0
    den = 0
    for x in a.keys() | b.keys():
        wa, wb = a.get(x, 0), b.get(x, 0)
        num += min(wa, wb)
        den += max(wa, wb)
    return num / den if den else 0.0


def build_jaccard_mapping(g: Graph, threshold: float, cfg: RunConfig = RunConfig(), *,
                          partition: VertexMapping | None = None, round_index: int = 0) -> VertexMapping:
    """Group (super)vertices with similar closed neighborhoods.

    Elements are the groups of ``partition`` (single vertices by default).
    Each element is described by how many of its members are adjacent or
    equal to each vertex. Elements are bucketed by a min-hash shingle of
    that support; within a bucket, in order of smallest member, an element
    joins the first cluster whose leader has generalized Jaccard similarity
    at least ``threshold``, otherwise it leads a new cluster. The result maps
    every vertex; members of one input group always stay together.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    part = VertexMapping.singletons(g.n) if partition is None else partition
    groups = part.members()
    adj = g.adj_lists
    hashes = first_u64(cfg.seed, "jaccard-shingle", np.arange(g.n) + (round_index << 32)).tolist()
    weights = [_closed_weights(adj, grp) for grp in groups]
    buckets: dict[int, list[int]] = {}
    for i, w in enumerate(weights):
        if not groups[i]:
            continue
        shingle = min(hashes[x] for x in w)
        buckets.setdefault(shingle, []).append(i)

    label = [-1] * len(groups)
    for items in buckets.values():
        items.sort(key=lambda i: groups[i][0])
        leaders: list[int] = []
        for i in items:
            for lead in leaders:
                if generalized_jaccard(weights[lead], weights[i]) >= threshold:
                    label[i] = label[lead]
                    break
            else:
                leaders.append(i)
                label[i] = i
    vertex_labels = [label[s] for s in part.subgraph_of.tolist()]
    return VertexMapping.from_labels(vertex_labels)
