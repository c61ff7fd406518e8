"""Immutable CSR graphs, edge-list I/O, and triangle enumeration."""
from __future__ import annotations

import io
import logging
import os
from collections import Counter
from functools import cached_property
from typing import BinaryIO, Iterable, NamedTuple, TextIO, Union

import numpy as np

log = logging.getLogger(__name__)

PathOrStream = Union[str, os.PathLike, BinaryIO, TextIO]


class EdgeListParseError(ValueError):
    def __init__(self, lineno: int, line: str, reason: str) -> None:
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


class EdgeListValidationError(ValueError):
    pass


class EdgeId(NamedTuple):
    """Canonical undirected edge key, ``u < v``."""

    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int) -> "EdgeId":
        return cls(a, b) if a < b else cls(b, a)


class Triangle(NamedTuple):
    a: int
    b: int
    c: int

    @property
    def edges(self) -> tuple[EdgeId, EdgeId, EdgeId]:
        return EdgeId(self.a, self.b), EdgeId(self.a, self.c), EdgeId(self.b, self.c)


class Graph:
    """Undirected graph in compressed-sparse-row form.

    Each undirected edge occupies two adjacency slots, one per endpoint.
    Neighbor lists are strictly increasing. ``weights`` is either ``None`` or
    a float array aligned with ``adjacency``.
    """

    def __init__(self, offsets: np.ndarray, adjacency: np.ndarray,
                 weights: np.ndarray | None = None, *, validate: bool = True) -> None:
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.adjacency = np.asarray(adjacency, dtype=np.int64)
        self.weights = None if weights is None else np.asarray(weights, dtype=np.float64)
        for arr in (self.offsets, self.adjacency, self.weights):
            if arr is not None:
                arr.setflags(write=False)
        if validate:
            self._check()

    # construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray,
                   weights: Iterable[float] | np.ndarray | None = None) -> "Graph":
        """Build a canonical graph; self-loops dropped, duplicates first-wins."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 2)
        w = None if weights is None else np.asarray(
            list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=np.float64)
        if w is not None and len(w) != len(arr):
            raise ValueError("weights and edges differ in length")
        if len(arr) and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        if w is not None and np.any(~(w > 0)):
            raise EdgeListValidationError("edge weights must be positive")
        keep = arr[:, 0] != arr[:, 1]
        arr, w = arr[keep], (None if w is None else w[keep])
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        key = lo * max(n, 1) + hi
        # np.unique returns the first occurrence under a stable sort
        order = np.argsort(key, kind="stable")
        _, first = np.unique(key[order], return_index=True)
        idx = order[first]
        return cls._from_canonical(n, lo[idx], hi[idx], None if w is None else w[idx])

    @classmethod
    def _from_canonical(cls, n: int, lo: np.ndarray, hi: np.ndarray,
                        w: np.ndarray | None) -> "Graph":
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=n)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        weights = None if w is None else np.concatenate([w, w])[order]
        return cls(offsets, dst[order], weights, validate=False)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), validate=False)

    def _check(self) -> None:
        n = len(self.offsets) - 1
        if n < 0 or self.offsets[0] != 0 or np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must start at 0 and be non-decreasing")
        if self.offsets[-1] != len(self.adjacency) or len(self.adjacency) % 2:
            raise ValueError("offsets[n] must equal the (even) adjacency length")
        if self.weights is not None and len(self.weights) != len(self.adjacency):
            raise ValueError("weights must align with adjacency")
        src = self._sources
        if len(self.adjacency):
            if self.adjacency.min() < 0 or self.adjacency.max() >= n:
                raise ValueError("neighbor id out of range")
            same = src[1:] == src[:-1]
            if np.any(self.adjacency[1:][same] <= self.adjacency[:-1][same]):
                raise ValueError("neighbor lists must be strictly increasing")
            if np.any(src == self.adjacency):
                raise ValueError("self-loops are not allowed")
        fwd = src < self.adjacency
        bwd = src > self.adjacency
        a = np.stack([src[fwd], self.adjacency[fwd]], axis=1)
        b = np.stack([self.adjacency[bwd], src[bwd]], axis=1)
        ia = np.lexsort((a[:, 1], a[:, 0]))
        ib = np.lexsort((b[:, 1], b[:, 0]))
        if len(a) != len(b) or not np.array_equal(a[ia], b[ib]):
            raise ValueError("adjacency is not symmetric")
        if self.weights is not None:
            if not np.array_equal(self.weights[fwd][ia], self.weights[bwd][ib]):
                raise ValueError("weights are not symmetric")
            if np.any(~(self.weights > 0)):
                raise ValueError("weights must be positive")

    # basic properties -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.offsets) - 1

    @property
    def m(self) -> int:
        return len(self.adjacency) // 2

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    @cached_property
    def _sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.offsets))

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[self.offsets[v]:self.offsets[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.degree(v))
        return self.weights[self.offsets[v]:self.offsets[v + 1]]

    @cached_property
    def adj_lists(self) -> list[list[int]]:
        """Neighbor lists as Python lists (fast to iterate in pure-Python loops)."""
        flat = self.adjacency.tolist()
        off = self.offsets.tolist()
        return [flat[off[v]:off[v + 1]] for v in range(self.n)]

    @cached_property
    def adj_sets(self) -> list[frozenset[int]]:
        return [frozenset(nb) for nb in self.adj_lists]

    @cached_property
    def edge_array(self) -> np.ndarray:
        """(m, 2) array of canonical edges sorted lexicographically."""
        src = self._sources
        fwd = src < self.adjacency
        out = np.stack([src[fwd], self.adjacency[fwd]], axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """Weights aligned with ``edge_array`` (ones when unweighted)."""
        if self.weights is None:
            return np.ones(self.m)
        return self.weights[self._sources < self.adjacency]

    def edges(self) -> list[EdgeId]:
        return [EdgeId(u, v) for u, v in self.edge_array.tolist()]

    @cached_property
    def _edge_index(self) -> dict[tuple[int, int], int]:
        return {(u, v): i for i, (u, v) in enumerate(self.edge_array.tolist())}

    def edge_index(self, u: int, v: int) -> int:
        """Position of edge ``{u, v}`` in ``edge_array``; KeyError if absent."""
        return self._edge_index[(u, v) if u < v else (v, u)]

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_index

    def weight(self, u: int, v: int) -> float:
        return float(self.edge_weights[self.edge_index(u, v)])

    def with_edge_weights(self, weights: np.ndarray | None) -> "Graph":
        """Same structure, new per-edge weights aligned with ``edge_array``."""
        if weights is None:
            return Graph(self.offsets, self.adjacency, None, validate=False)
        e = self.edge_array
        return Graph._from_canonical(self.n, e[:, 0], e[:, 1], np.asarray(weights, dtype=np.float64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if not (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.adjacency, other.adjacency)):
            return False
        if self.weights is None or other.weights is None:
            return self.weights is None and other.weights is None
        return np.array_equal(self.weights, other.weights)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        kind = "weighted" if self.weighted else "unweighted"
        return f"Graph(n={self.n}, m={self.m}, {kind})"


# ----------------------------------------------------------------------
# edge-list I/O


def _open_text(source: PathOrStream, mode: str):
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode + "b"), True
    return source, False


def load_edge_list(source: PathOrStream, *, symmetrize: bool = True,
                   weighted: bool | None = None, n: int | None = None) -> Graph:
    """Parse a whitespace-separated edge list into a canonical graph.

    Lines starting with ``#`` or ``%`` are comments. ``weighted=None`` makes the
    graph weighted iff some line carries a third field (missing weights are
    then 1.0). With ``symmetrize`` a reversed pair is the mirror of an edge
    already seen; without it, any repeated pair counts as a duplicate.
    """
    stream, owned = _open_text(source, "r")
    try:
        data = stream.read()
    finally:
        if owned:
            stream.close()
    text = data.decode("utf-8") if isinstance(data, bytes) else data

    us: list[int] = []
    vs: list[int] = []
    ws: list[float | None] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListParseError(lineno, line, "expected 'u v' or 'u v w'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(lineno, line, "vertex ids must be integers") from None
        if u < 0 or v < 0:
            raise EdgeListParseError(lineno, line, "vertex ids must be non-negative")
        w = None
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListParseError(lineno, line, "weight must be a number") from None
            if not w > 0 or w == float("inf"):
                raise EdgeListValidationError(f"line {lineno}: weight must be positive and finite, got {parts[2]}")
        elif weighted:
            raise EdgeListParseError(lineno, line, "missing weight")
        us.append(u)
        vs.append(v)
        ws.append(w)

    if weighted is None:
        weighted = any(w is not None for w in ws)
    size = n if n is not None else (max(max(us), max(vs)) + 1 if us else 0)
    pairs = np.array([us, vs], dtype=np.int64).T.reshape(-1, 2)
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    if symmetrize:
        directed = Counter(zip(pairs[:, 0].tolist(), pairs[:, 1].tolist()))
        dup = sum(c - 1 for c in directed.values())
    else:
        undirected = Counter(zip(lo.tolist(), hi.tolist()))
        dup = sum(c - 1 for c in undirected.values())
    if dup:
        log.warning("merged %d duplicate edge line(s); first weight wins", dup)
    weights = np.array([1.0 if w is None else w for w in ws]) if weighted else None
    return Graph.from_edges(size, pairs, weights)


def format_weight(w: float) -> str:
    return repr(float(w))


def write_edge_list(g: Graph, sink: PathOrStream) -> None:
    """Write each undirected edge once as ``u v [w]``, sorted, ``u < v``."""
    lines = []
    if g.weighted:
        for (u, v), w in zip(g.edge_array.tolist(), g.edge_weights.tolist()):
            lines.append(f"{u} {v} {format_weight(w)}\n")
    else:
        lines = [f"{u} {v}\n" for u, v in g.edge_array.tolist()]
    payload = "".join(lines)
    stream, owned = _open_text(sink, "w")
    try:
        if isinstance(stream, io.TextIOBase):
            stream.write(payload)
        else:
            stream.write(payload.encode("utf-8"))
    finally:
        if owned:
            stream.close()


# ----------------------------------------------------------------------
# structure


def enumerate_triangles(g: Graph) -> list[Triangle]:
    """All triangles, each once, sorted by ``(a, b, c)``.

    Edges are oriented from lower to higher (degree, id) rank, so every
    vertex's out-list has O(sqrt(m)) entries and the whole pass is O(m^1.5).
    """
    deg = g.degrees.tolist()
    out: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edge_array.tolist():
        if (deg[u], u) < (deg[v], v):
            out[u].add(v)
        else:
            out[v].add(u)
    found = []
    for u in range(g.n):
        ou = out[u]
        if len(ou) < 2:
            continue
        for v in ou:
            for w in ou & out[v]:
                found.append(tuple(sorted((u, v, w))))
    found.sort()
    return [Triangle(*t) for t in found]


def triangle_count(g: Graph) -> int:
    return len(enumerate_triangles(g))


def triangles_per_edge(g: Graph) -> dict[EdgeId, int]:
    counts = {e: 0 for e in g.edges()}
    for t in enumerate_triangles(g):
        for e in t.edges:
            counts[e] += 1
    return counts


def degree_histogram(g: Graph) -> dict[int, int]:
    hist = Counter(g.degrees.tolist())
    return dict(sorted(hist.items()))


def apply_deletions(g: Graph, dead_edges: Iterable[tuple[int, int]] = (),
                    dead_vertices: Iterable[int] = (), *, compact: bool = False,
                    new_weights: dict[tuple[int, int], float] | None = None):
    """Remove edges and vertices.

    By default vertex ids are preserved (removed vertices become isolated).
    With ``compact=True`` surviving vertices are renumbered in id order and the
    result is ``(graph, old_to_new)`` where removed vertices map to -1.
    ``new_weights`` overrides weights of surviving edges (the result is then
    weighted).
    """
    e = g.edge_array
    alive = np.ones(g.m, dtype=bool)
    dead_e = list(dead_edges)
    if dead_e:
        idx = [g._edge_index.get((u, v) if u < v else (v, u), -1) for u, v in dead_e]
        idx = [i for i in idx if i >= 0]
        alive[idx] = False
    vdead = np.zeros(g.n, dtype=bool)
    dv = list(dead_vertices)
    if dv:
        vdead[dv] = True
        alive &= ~(vdead[e[:, 0]] | vdead[e[:, 1]])
    w = None
    if g.weighted or new_weights:
        w = g.edge_weights.copy()
        for (a, b), val in (new_weights or {}).items():
            w[g.edge_index(a, b)] = val
        w = w[alive]
    lo, hi = e[alive, 0], e[alive, 1]
    if not compact:
        return Graph._from_canonical(g.n, lo.copy(), hi.copy(), w)
    old_to_new = np.full(g.n, -1, dtype=np.int64)
    keep = np.flatnonzero(~vdead)
    old_to_new[keep] = np.arange(len(keep))
    return Graph._from_canonical(len(keep), old_to_new[lo], old_to_new[hi], w), old_to_new
