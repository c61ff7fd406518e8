"""Lossy compression schemes built on the kernel engine.

Every probability ``p`` here is a *removal* probability: uniform sampling
deletes each edge with probability ``p`` and triangle reduction reduces each
triangle with probability ``p``.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from slimgraph.engine import (
    RunConfig,
    SubgraphView,
    VertexMapping,
    build_jaccard_mapping,
    build_ldd_mapping,
    commit,
    edge_draws,
    run_subgraph_kernels,
    run_triangle_kernels,
    run_vertex_kernels,
)
from slimgraph.graph import EdgeId, Graph, apply_deletions, enumerate_triangles, triangles_per_edge

SCHEMES = ("uniform", "spectral", "tr", "spanner", "summarize", "low_degree")
TR_VARIANTS = ("basic", "edge_once", "count_triangles", "max_weight", "collapse")
UPSILON_MODES = ("log_n", "avg_degree")

_RELEVANT = {
    "uniform": {"p"},
    "spectral": {"p", "upsilon_mode"},
    "tr": {"p", "x", "variant", "literal_eo"},
    "spanner": {"k", "cluster_pairs"},
    "summarize": {"epsilon", "threshold", "iterations"},
    "low_degree": set(),
}
_DEFAULTS = {
    "spectral": {"upsilon_mode": "log_n"},
    "tr": {"x": 1, "variant": "basic"},
    "summarize": {"threshold": 0.5, "iterations": 5},
}


class ConfigurationError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    """A scheme name plus the parameters relevant to it (others stay unset)."""

    scheme: str
    p: float | None = None
    x: int | None = None
    variant: str | None = None
    k: float | None = None
    epsilon: float | None = None
    upsilon_mode: str | None = None
    threshold: float | None = None
    iterations: int | None = None
    seed: int = 0
    literal_eo: bool = False
    cluster_pairs: bool = False

    @classmethod
    def create(cls, scheme: str, seed: int = 0, **params: Any) -> "SchemeConfig":
        """Fill scheme defaults for unset parameters, then validate."""
        scheme = scheme.replace("-", "_")
        params = {k: v for k, v in params.items() if v is not None}
        merged = {**_DEFAULTS.get(scheme, {}), **params}
        cfg = cls(scheme=scheme, seed=seed, **merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        relevant = _RELEVANT[self.scheme]
        for name in ("p", "x", "variant", "k", "epsilon", "upsilon_mode", "threshold", "iterations"):
            if getattr(self, name) is not None and name not in relevant:
                raise ConfigurationError(f"parameter {name!r} does not apply to scheme {self.scheme!r}")
        for name in ("literal_eo", "cluster_pairs"):
            if getattr(self, name) and name not in relevant:
                raise ConfigurationError(f"flag {name!r} does not apply to scheme {self.scheme!r}")
        for name in relevant - {"literal_eo", "cluster_pairs"}:
            if getattr(self, name) is None:
                raise ConfigurationError(f"scheme {self.scheme!r} requires parameter {name!r}")
        if self.p is not None:
            if self.scheme == "spectral":
                if not self.p > 0:
                    raise ConfigurationError("spectral sparsification needs p > 0")
            elif not 0.0 <= self.p <= 1.0:
                raise ConfigurationError("p must lie in [0, 1]")
        if self.x is not None and self.x not in (1, 2):
            raise ConfigurationError("x must be 1 or 2")
        if self.variant is not None and self.variant not in TR_VARIANTS:
            raise ConfigurationError(f"unknown triangle-reduction variant {self.variant!r}")
        if self.literal_eo and self.variant != "edge_once":
            raise ConfigurationError("literal_eo only applies to the edge_once variant")
        if self.k is not None and not self.k >= 1:
            raise ConfigurationError("k must be >= 1")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError("epsilon must lie in [0, 1]")
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ConfigurationError("threshold must lie in [0, 1]")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.upsilon_mode is not None and self.upsilon_mode not in UPSILON_MODES:
            raise ConfigurationError(f"unknown upsilon mode {self.upsilon_mode!r}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"scheme": self.scheme}
        for name in ("p", "x", "variant", "k", "epsilon", "upsilon_mode", "threshold", "iterations"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        for name in ("literal_eo", "cluster_pairs"):
            if getattr(self, name):
                out[name] = True
        out["seed"] = self.seed
        return out

    def params_label(self) -> str:
        d = self.to_dict()
        return ";".join(f"{k}={d[k]}" for k in d if k not in ("scheme", "seed"))


@dataclass
class CompressionStats:
    edges_before: int
    edges_after: int
    vertices_before: int
    vertices_after: int
    wall_time: float
    scheme_echo: dict[str, Any]
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, *, timing: bool = True) -> dict[str, Any]:
        d = asdict(self)
        if not timing:
            d["wall_time"] = None
        return d


@dataclass
class SummaryGraph:
    """Supervertices, superedges, and the two correction sets."""

    supervertex_of: np.ndarray
    summary_edges: set[tuple[int, int]]
    corrections_plus: set[EdgeId]
    corrections_minus: set[EdgeId]

    @property
    def supervertex_count(self) -> int:
        return int(self.supervertex_of.max()) + 1 if len(self.supervertex_of) else 0

    def members(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.supervertex_count)]
        for v, s in enumerate(self.supervertex_of.tolist()):
            groups[s].append(v)
        return groups

    def size(self) -> int:
        return len(self.summary_edges) + len(self.corrections_plus) + len(self.corrections_minus)

    def to_dict(self) -> dict[str, Any]:
        return {
            "supervertex_of": self.supervertex_of.tolist(),
            "summary_edges": sorted(list(e) for e in self.summary_edges),
            "corrections_plus": sorted(list(e) for e in self.corrections_plus),
            "corrections_minus": sorted(list(e) for e in self.corrections_minus),
        }


@dataclass
class CompressionResult:
    graph: Graph
    stats: CompressionStats
    summary: SummaryGraph | None = None
    vertex_map: np.ndarray | None = None


def _stats(g: Graph, out: Graph, t0: float, config: SchemeConfig,
           vertices_after: int | None = None, **extra: Any) -> CompressionStats:
    return CompressionStats(
        edges_before=g.m, edges_after=out.m, vertices_before=g.n,
        vertices_after=out.n if vertices_after is None else vertices_after,
        wall_time=time.perf_counter() - t0, scheme_echo=config.to_dict(), extra=extra)


# ----------------------------------------------------------------------
# single-edge kernels


def uniform_kernel(p: float):
    def kernel(e, ctx):
        if ctx.rng.random() < p:
            ctx.delete_edge(e.u, e.v)
    return kernel


def uniform_sample(g: Graph, p: float, cfg: RunConfig = RunConfig()) -> tuple[Graph, CompressionStats]:
    """Delete every edge independently with probability ``p``.

    Decisions are those of ``uniform_kernel`` run by ``run_edge_kernels``;
    the single draw per edge is evaluated for all edges at once.
    """
    config = SchemeConfig.create("uniform", seed=cfg.seed, p=p)
    t0 = time.perf_counter()
    dead = edge_draws(g, cfg, "uniform") < p
    out = apply_deletions(g, map(tuple, g.edge_array[dead].tolist()))
    return out, _stats(g, out, t0, config)


def upsilon_for(g: Graph, p: float, mode: str) -> float:
    if mode == "log_n":
        return p * math.log(g.n)
    if mode == "avg_degree":
        return p * g.m / g.n
    raise ConfigurationError(f"unknown upsilon mode {mode!r}")


def _keep_probability(upsilon: float, deg_u, deg_v):
    return np.minimum(1.0, upsilon / np.minimum(deg_u, deg_v))


def spectral_kernel(upsilon: float):
    def kernel(e, ctx):
        stays = float(_keep_probability(upsilon, e.deg_u, e.deg_v))
        if stays <= ctx.rng.random():
            ctx.delete_edge(e.u, e.v)
        else:
            ctx.reweight(e.u, e.v, e.weight / stays)
    return kernel


def spectral_sparsify(g: Graph, p: float, upsilon_mode: str = "log_n",
                      cfg: RunConfig = RunConfig(), *,
                      upsilon: float | None = None) -> tuple[Graph, CompressionStats]:
    """Keep edge ``(u, v)`` with probability ``min(1, Υ / min(d_u, d_v))``.

    Kept edges are divided by their keep probability, so every vertex keeps
    its weighted degree in expectation. ``upsilon`` overrides the value
    derived from ``p`` and ``upsilon_mode``. The result is always weighted.
    Decisions match ``spectral_kernel`` under ``run_edge_kernels``.
    """
    config = SchemeConfig.create("spectral", seed=cfg.seed, p=p, upsilon_mode=upsilon_mode)
    if g.n < 2:
        raise DegenerateInputError("spectral sparsification needs at least two vertices")
    ups = upsilon_for(g, p, upsilon_mode) if upsilon is None else upsilon
    t0 = time.perf_counter()
    e = g.edge_array
    deg = g.degrees
    stays = _keep_probability(ups, deg[e[:, 0]], deg[e[:, 1]])
    kept = ~(stays <= edge_draws(g, cfg, "spectral"))
    w = g.edge_weights[kept] / stays[kept]
    out = Graph._from_canonical(g.n, e[kept, 0].copy(), e[kept, 1].copy(), w)
    return out, _stats(g, out, t0, config, upsilon=ups)


# ----------------------------------------------------------------------
# triangle kernels


def _ordered_edges(tri, variant, ctx, tpe, g):
    edges = tri.edges
    if variant == "count_triangles":
        return sorted(edges, key=lambda e: (tpe[e], e))
    if variant == "max_weight":
        return sorted(edges, key=lambda e: (-g.weight(*e), e))
    return ctx.rng.sample(edges, 3)


def triangle_reduce(g: Graph, p: float, x: int = 1, variant: str = "basic",
                    cfg: RunConfig = RunConfig(), *,
                    literal_eo: bool = False) -> tuple[Graph, CompressionStats]:
    """Triangle p-x-Reduction and its variants.

    Each triangle is selected with probability ``p``. ``basic`` deletes ``x``
    random edges of a selected triangle. ``edge_once``, ``count_triangles``
    and ``max_weight`` only reduce a triangle whose three edges are still
    present and unconsidered; they delete ``x`` edges (random, fewest
    triangles, heaviest) and mark the rest considered. ``collapse`` merges a
    selected triangle into its smallest vertex, skipping triangles that touch
    an already merged vertex; the output is renumbered.
    """
    config = SchemeConfig.create("tr", seed=cfg.seed, p=p, x=x, variant=variant,
                                 literal_eo=literal_eo)
    if variant == "max_weight" and not g.weighted:
        raise ConfigurationError("max_weight triangle reduction needs a weighted graph")
    if variant == "collapse":
        return _collapse(g, p, cfg, config)
    t0 = time.perf_counter()
    tris = enumerate_triangles(g)
    tpe = triangles_per_edge(g) if variant == "count_triangles" else None
    reduced = [0]

    if variant == "basic" or literal_eo:
        def kernel(tri, ctx):
            if not ctx.rng.random() < p:
                return
            if literal_eo:
                e = ctx.rng.choice(tri.edges)
                with ctx.atomic():
                    if e not in ctx.marks:
                        ctx.delete_edge(*e)
                    else:
                        ctx.marks.test_and_set(e)
                return
            for e in ctx.rng.sample(tri.edges, x):
                ctx.delete_edge(*e)
    else:
        def kernel(tri, ctx):
            if not ctx.rng.random() < p:
                return
            order = _ordered_edges(tri, variant, ctx, tpe, g)
            with ctx.atomic():
                if any(e in ctx.marks or ctx.is_deleted(e) for e in order):
                    return
                for e in order[:x]:
                    ctx.delete_edge(*e)
                for e in order:
                    ctx.marks.test_and_set(e)
                reduced[0] += 1

    buf = run_triangle_kernels(g, kernel, cfg, purpose=f"tr-{variant}", triangles=tris)
    out = commit(g, buf)
    return out, _stats(g, out, t0, config, triangles=len(tris), reduced_triangles=reduced[0])


def _collapse(g: Graph, p: float, cfg: RunConfig, config: SchemeConfig):
    t0 = time.perf_counter()
    target: dict[int, int] = {}

    def kernel(tri, ctx):
        if not ctx.rng.random() < p:
            return
        with ctx.atomic():
            if any(v in target for v in tri):
                return
            for v in tri:
                target[v] = tri.a

    tris = enumerate_triangles(g)
    run_triangle_kernels(g, kernel, cfg, purpose="tr-collapse", triangles=tris)
    removed = sorted(v for v, t in target.items() if v != t)
    old_to_new = np.full(g.n, -1, dtype=np.int64)
    alive = np.ones(g.n, dtype=bool)
    alive[removed] = False
    old_to_new[alive] = np.arange(int(alive.sum()))
    rep = np.arange(g.n)
    for v, t in target.items():
        rep[v] = t
    mapped = old_to_new[rep]
    e = g.edge_array
    a, b = mapped[e[:, 0]], mapped[e[:, 1]]
    w = g.edge_weights if g.weighted else None
    if w is not None:
        # parallel edges created by a merge keep the lightest weight
        order = np.argsort(w, kind="stable")
        a, b, w = a[order], b[order], w[order]
    out = Graph.from_edges(int(alive.sum()), np.stack([a, b], axis=1), w)
    stats = _stats(g, out, t0, config, triangles=len(tris),
                   collapsed_triangles=len(removed) // 2, vertex_map=mapped.tolist())
    return out, stats


# ----------------------------------------------------------------------
# single-vertex kernel


def remove_low_degree(g: Graph, cfg: RunConfig = RunConfig()) -> tuple[Graph, CompressionStats]:
    """Delete every vertex of degree 0 or 1 in the input (one pass, ids kept)."""
    config = SchemeConfig.create("low_degree", seed=cfg.seed)
    t0 = time.perf_counter()

    def kernel(v, ctx):
        if v.deg == 0 or v.deg == 1:
            ctx.delete_vertex(v.v)

    buf = run_vertex_kernels(g, kernel, cfg, purpose="low-degree")
    removed = len(buf.dead_vertices)
    out = commit(g, buf)
    return out, _stats(g, out, t0, config, vertices_after=g.n - removed, removed_vertices=removed)


# ----------------------------------------------------------------------
# subgraph kernels: spanners


def _cluster_bfs_tree(adj: list[list[int]], sub: list[int], cid: int, root: int) -> set[EdgeId]:
    tree = set()
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if sub[w] == cid and w not in seen:
                seen.add(w)
                tree.add(EdgeId.of(u, w))
                queue.append(w)
    return tree


def _inter_cluster_keep(g: Graph, sub: list[int], cluster_pairs: bool) -> set[EdgeId]:
    keep: set[EdgeId] = set()
    if cluster_pairs:
        best: dict[tuple[int, int], EdgeId] = {}
        for u, v in g.edge_array.tolist():
            cu, cv = sub[u], sub[v]
            if cu != cv:
                pair = (cu, cv) if cu < cv else (cv, cu)
                if pair not in best:
                    best[pair] = EdgeId(u, v)
        return set(best.values())
    for v, nbrs in enumerate(g.adj_lists):
        chosen: dict[int, EdgeId] = {}
        for w in nbrs:
            c = sub[w]
            if c != sub[v]:
                e = EdgeId.of(v, w)
                if c not in chosen or e < chosen[c]:
                    chosen[c] = e
        keep.update(chosen.values())
    return keep


def build_spanner(g: Graph, k: float, cfg: RunConfig = RunConfig(), *,
                  cluster_pairs: bool = False,
                  mapping: VertexMapping | None = None) -> tuple[Graph, CompressionStats]:
    """O(k)-spanner from a low-diameter decomposition.

    Each cluster is replaced by a BFS tree from its center. Between clusters
    a vertex keeps its smallest edge into each neighboring cluster (or, with
    ``cluster_pairs``, one edge survives per pair of adjacent clusters).
    """
    config = SchemeConfig.create("spanner", seed=cfg.seed, k=k, cluster_pairs=cluster_pairs)
    t0 = time.perf_counter()
    if mapping is None:
        mapping = build_ldd_mapping(g, k, cfg)
    sub = mapping.subgraph_of.tolist()
    adj = g.adj_lists
    keep_out = _inter_cluster_keep(g, sub, cluster_pairs)
    centers = mapping.centers or [m[0] for m in mapping.members()]

    def kernel(s: SubgraphView, ctx):
        tree = _cluster_bfs_tree(adj, sub, s.id, centers[s.id])
        for e in s.intra_edges:
            if e not in tree:
                ctx.delete_edge(*e)
        for v, w in s.out_edges:
            if EdgeId.of(v, w) not in keep_out:
                ctx.delete_edge(v, w)

    buf = run_subgraph_kernels(g, mapping, kernel, cfg, purpose="spanner")
    out = commit(g, buf)
    return out, _stats(g, out, t0, config, clusters=mapping.subgraph_count)


# ----------------------------------------------------------------------
# subgraph kernels: lossy summaries


def _block_pairs(a: list[int], b: list[int], same: bool):
    if same:
        for i, u in enumerate(a):
            for v in a[i + 1:]:
                yield EdgeId.of(u, v)
    else:
        for u in a:
            for v in b:
                yield EdgeId.of(u, v)


def summarize(g: Graph, epsilon: float, threshold: float = 0.5, iterations: int = 5,
              cfg: RunConfig = RunConfig()) -> tuple[SummaryGraph, CompressionStats]:
    """Lossy epsilon-summary.

    Supervertices come from repeated Jaccard clustering. A pair of
    supervertices gets a superedge when more than half of its possible
    vertex pairs are edges; missing pairs then go to ``corrections_minus``,
    otherwise the edges go to ``corrections_plus``. Finally superedges and
    corrections are dropped, biggest savings first, as long as no vertex
    ``v`` ends up with more than ``epsilon * d_v`` misdescribed neighbors.
    """
    config = SchemeConfig.create("summarize", seed=cfg.seed, epsilon=epsilon,
                                 threshold=threshold, iterations=iterations)
    t0 = time.perf_counter()
    partition = VertexMapping.singletons(g.n)
    rounds = 0
    for it in range(iterations):
        merged = build_jaccard_mapping(g, threshold, cfg, partition=partition, round_index=it)
        rounds += 1
        if merged.subgraph_count == partition.subgraph_count:
            break
        partition = merged

    members = partition.members()
    sub = partition.subgraph_of.tolist()
    superedges: dict[tuple[int, int], set[EdgeId]] = {}
    plus: set[EdgeId] = set()

    def derive_summary(s: SubgraphView, ctx):
        blocks: dict[int, list[EdgeId]] = {s.id: list(s.intra_edges)}
        for v, w in s.out_edges:
            if sub[w] > s.id:
                blocks.setdefault(sub[w], []).append(EdgeId.of(v, w))
        for other, present in blocks.items():
            if not present:
                continue
            a, b = members[s.id], members[other]
            same = other == s.id
            possible = len(a) * (len(a) - 1) // 2 if same else len(a) * len(b)
            with ctx.atomic():
                if len(present) * 2 > possible:
                    have = set(present)
                    superedges[(s.id, other)] = {e for e in _block_pairs(a, b, same) if e not in have}
                else:
                    plus.update(present)

    run_subgraph_kernels(g, partition, derive_summary, cfg, purpose="summary")

    # lossy step
    deg = g.degrees.tolist()
    err = [0] * g.n
    budget = [epsilon * d for d in deg]

    def fits(cost: dict[int, int]) -> bool:
        return all(err[v] + c <= budget[v] for v, c in cost.items())

    def spend(cost: dict[int, int]) -> None:
        for v, c in cost.items():
            err[v] += c

    dropped_super = 0
    if epsilon > 0:
        order = sorted(superedges, key=lambda key: (-(1 + len(superedges[key])), key))
        for key in order:
            a, b = members[key[0]], members[key[1]]
            missing = superedges[key]
            cost: dict[int, int] = {}
            for e in _block_pairs(a, b, key[0] == key[1]):
                if e not in missing:
                    cost[e.u] = cost.get(e.u, 0) + 1
                    cost[e.v] = cost.get(e.v, 0) + 1
            if fits(cost):
                spend(cost)
                del superedges[key]
                dropped_super += 1

    minus = {e for miss in superedges.values() for e in miss}
    dropped_corr = 0
    if epsilon > 0:
        for e in sorted(plus | minus):
            if err[e.u] + 1 <= budget[e.u] and err[e.v] + 1 <= budget[e.v]:
                err[e.u] += 1
                err[e.v] += 1
                plus.discard(e)
                minus.discard(e)
                dropped_corr += 1

    summary = SummaryGraph(partition.subgraph_of.copy(), set(superedges), plus, minus)
    rebuilt = reconstruct(summary, g.n)
    stats = _stats(g, rebuilt, t0, config,
                   supervertices=partition.subgraph_count, superedges=len(superedges),
                   corrections_plus=len(plus), corrections_minus=len(minus),
                   summary_size=summary.size(), rounds=rounds,
                   dropped_superedges=dropped_super, dropped_corrections=dropped_corr)
    return summary, stats


def reconstruct(s: SummaryGraph, n: int) -> Graph:
    """Expand superedges, subtract ``corrections_minus``, add ``corrections_plus``."""
    if len(s.supervertex_of) != n:
        raise ValueError("summary does not cover n vertices")
    for e in (*s.corrections_plus, *s.corrections_minus):
        if not (0 <= e[0] < n and 0 <= e[1] < n) or e[0] == e[1]:
            raise ValueError(f"correction {tuple(e)} references an unknown vertex pair")
    members = s.members()
    edges = set()
    for a, b in s.summary_edges:
        if not (0 <= a < len(members) and 0 <= b < len(members)):
            raise ValueError(f"superedge {(a, b)} references an unknown supervertex")
        edges.update(_block_pairs(members[a], members[b], a == b))
    edges -= {EdgeId.of(*e) for e in s.corrections_minus}
    edges |= {EdgeId.of(*e) for e in s.corrections_plus}
    return Graph.from_edges(n, sorted(edges))


# ----------------------------------------------------------------------


def compress(g: Graph, config: SchemeConfig, cfg: RunConfig | None = None) -> CompressionResult:
    """Run the scheme named by ``config``."""
    config.validate()
    cfg = RunConfig(seed=config.seed) if cfg is None else cfg
    s = config.scheme
    if s == "uniform":
        return CompressionResult(*uniform_sample(g, config.p, cfg))
    if s == "spectral":
        return CompressionResult(*spectral_sparsify(g, config.p, config.upsilon_mode, cfg))
    if s == "tr":
        out, stats = triangle_reduce(g, config.p, config.x, config.variant, cfg,
                                     literal_eo=config.literal_eo)
        vmap = stats.extra.get("vertex_map")
        return CompressionResult(out, stats, vertex_map=None if vmap is None else np.asarray(vmap))
    if s == "spanner":
        return CompressionResult(*build_spanner(g, config.k, cfg, cluster_pairs=config.cluster_pairs))
    if s == "summarize":
        summary, stats = summarize(g, config.epsilon, config.threshold, config.iterations, cfg)
        return CompressionResult(reconstruct(summary, g.n), stats, summary=summary)
    if s == "low_degree":
        return CompressionResult(*remove_low_degree(g, cfg))
    raise ConfigurationError(f"unknown scheme {s!r}")
