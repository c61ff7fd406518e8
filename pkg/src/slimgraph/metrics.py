"""Accuracy metrics comparing algorithm outcomes on original vs compressed graphs.

``None`` is the "undefined" marker throughout: it is serialized as JSON
``null`` and as ``undefined`` in CSV.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from slimgraph import algorithms as alg
from slimgraph.engine import RunConfig
from slimgraph.graph import EdgeId, Graph

MAX_PAIRS_N = 20000


def scalar_accuracy(original: float, compressed: float) -> float | None:
    """|compressed / original|; 1.0 means unchanged."""
    if original == 0:
        return None
    return abs(compressed / original)


def _sign_inversions(a_i: np.ndarray, a: np.ndarray, b_i: np.ndarray, b: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        sa = np.sign(a_i - a)
        sb = np.sign(b_i - b)
    # inf - inf gives nan; such pairs are tied
    sa = np.nan_to_num(sa, nan=0.0)
    sb = np.nan_to_num(sb, nan=0.0)
    return sa * sb < 0


def reordered_pairs(a, b) -> float:
    """Fraction of the C(n, 2) vertex pairs whose strict order flips from ``a`` to ``b``.

    Pairs tied in either vector do not count as reordered.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("score vectors differ in length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two vertices")
    if n > MAX_PAIRS_N:
        raise ValueError(f"reordered_pairs is O(n^2); refusing n > {MAX_PAIRS_N}")
    flipped = 0
    for i in range(n - 1):
        flipped += int(_sign_inversions(a[i], a[i + 1:], b[i], b[i + 1:]).sum())
    return flipped / (n * (n - 1) / 2)


def reordered_neighbors(g: Graph, a, b) -> float | None:
    """Fraction of edges whose endpoint order flips from ``a`` to ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != g.n or len(b) != g.n:
        raise ValueError("score vectors must cover the graph's vertices")
    if g.m == 0:
        return None
    e = g.edge_array
    flips = _sign_inversions(a[e[:, 0]], a[e[:, 1]], b[e[:, 0]], b[e[:, 1]])
    return float(flips.sum()) / g.m


def kl_divergence(p, q) -> float | None:
    """Kullback-Leibler divergence of ``q`` from ``p`` in bits."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions differ in support size")
    support = p > 0
    if np.any(q[support] <= 0):
        return None
    ps, qs = p[support], q[support]
    return max(0.0, float(np.sum(ps * np.log2(ps / qs))))


def critical_edges(g: Graph, root: int) -> set[EdgeId]:
    """Edges that are BFS-tree edges from ``root`` under some tie-breaking.

    Those are exactly the edges joining reachable vertices on adjacent levels.
    """
    level = alg.bfs(g, root).level
    e = g.edge_array
    lu, lv = level[e[:, 0]], level[e[:, 1]]
    ok = (lu >= 0) & (lv >= 0) & (np.abs(lu - lv) == 1)
    return {EdgeId(u, v) for u, v in e[ok].tolist()}


def critical_edge_preservation(g: Graph, g_comp: Graph, root: int) -> float | None:
    if g.n != g_comp.n:
        raise ValueError("graphs must share the vertex id space")
    base = len(critical_edges(g, root))
    if base == 0:
        return None
    return len(critical_edges(g_comp, root)) / base


# ----------------------------------------------------------------------
# reports


@dataclass
class MetricEntry:
    name: str
    value: float | None
    details: dict[str, Any] | None = None


@dataclass
class MetricReport:
    algorithm: str
    scheme_echo: dict[str, Any] | None = None
    entries: list[MetricEntry] = field(default_factory=list)

    def add(self, name: str, value: float | None, details: dict[str, Any] | None = None) -> None:
        if any(e.name == name for e in self.entries):
            raise ValueError(f"duplicate metric {name!r}")
        if value is not None:
            value = float(value)
            if not math.isfinite(value):
                value = None
        self.entries.append(MetricEntry(name, value, details))

    def __getitem__(self, name: str) -> float | None:
        for e in self.entries:
            if e.name == name:
                return e.value
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "scheme": self.scheme_echo,
            "metrics": [
                {"name": e.name, "value": e.value, **({"details": e.details} if e.details else {})}
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def csv_rows(self) -> list[list[str]]:
        scheme = (self.scheme_echo or {}).get("scheme", "")
        params = ";".join(f"{k}={v}" for k, v in (self.scheme_echo or {}).items()
                          if k not in ("scheme", "seed"))
        return [[e.name, scheme, params, "undefined" if e.value is None else repr(e.value)]
                for e in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "scheme", "param", "value"])
        w.writerows(self.csv_rows())
        return buf.getvalue()


def _json_scalar(x: float) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def run_algorithm(g: Graph, name: str, params: dict[str, Any]) -> Any:
    root = int(params.get("root", 0))
    if name == "bfs":
        return alg.bfs(g, root)
    if name == "sssp":
        return alg.sssp(g, root)
    if name == "cc":
        return alg.connected_components(g)[0]
    if name == "tc":
        return alg.triangle_count(g)[0]
    if name == "tcv":
        return alg.triangle_count(g)[1]
    if name == "pagerank":
        return alg.pagerank(g, damping=float(params.get("damping", 0.85)),
                            iterations=int(params.get("iterations", 100)),
                            tol=float(params.get("tol", 1e-10)))
    if name == "mst":
        return alg.mst_weight(g)
    if name == "coloring":
        return alg.greedy_coloring(g)[0]
    if name == "matching":
        return alg.greedy_matching(g)[0]
    if name == "mis":
        return alg.greedy_mis(g)[0]
    if name == "bc":
        return alg.betweenness(g)
    if name == "degree":
        return g.degrees.astype(np.float64)
    if name == "diameter":
        return alg.diameter_estimate(g, int(params.get("probes", 16)),
                                     RunConfig(seed=int(params.get("seed", 0))))
    raise ValueError(f"unknown algorithm {name!r}")


# Output kinds per algorithm: S scalar, V vector, P distribution, B BFS.
ALGORITHMS: dict[str, str] = {
    "bfs": "B",
    "sssp": "V",
    "cc": "S",
    "tc": "S",
    "tcv": "V",
    "pagerank": "VP",
    "mst": "S",
    "coloring": "S",
    "matching": "S",
    "mis": "S",
    "bc": "V",
    "degree": "VP",
    "diameter": "S",
}


def compare_run(g: Graph, g_comp: Graph, algorithm: str, params: dict[str, Any] | None = None,
                scheme_echo: dict[str, Any] | None = None, *,
                same_vertex_set: bool | None = None) -> MetricReport:
    """Run ``algorithm`` on both graphs and report the metrics its output type admits.

    Per-vertex metrics are undefined when the two graphs do not share a vertex
    set (different ``n``, or ``same_vertex_set=False``).
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    params = dict(params or {})
    kinds = ALGORITHMS[algorithm]
    aligned = (g.n == g_comp.n) if same_vertex_set is None else (same_vertex_set and g.n == g_comp.n)
    report = MetricReport(algorithm, scheme_echo)

    if kinds == "B":
        root = int(params.get("root", 0))
        value = critical_edge_preservation(g, g_comp, root) if aligned else None
        report.add("critical_edge_preservation", value)
        return report

    if kinds == "S":
        r = run_algorithm(g, algorithm, params)
        rc = run_algorithm(g_comp, algorithm, params)
        report.add("A_S", scalar_accuracy(r, rc),
                   {"original": _json_scalar(r), "compressed": _json_scalar(rc)})
        return report

    a = run_algorithm(g, algorithm, params)
    b = run_algorithm(g_comp, algorithm, params) if aligned else None
    if "V" in kinds:
        report.add("A_RE", reordered_pairs(a, b) if aligned and g.n >= 2 else None)
        report.add("A_REN", reordered_neighbors(g, a, b) if aligned else None)
    if "P" in kinds:
        if aligned:
            pa, pb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
            pa = pa / pa.sum() if pa.sum() > 0 else pa
            pb = pb / pb.sum() if pb.sum() > 0 else pb
            report.add("KL", kl_divergence(pa, pb))
        else:
            report.add("KL", None)
    return report
