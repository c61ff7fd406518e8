"""Command-line front end: compress, eval, compare, sweep.

Exit codes: 0 success, 1 input/parse failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from slimgraph import algorithms as alg
from slimgraph.engine import RunConfig
from slimgraph.graph import EdgeListParseError, EdgeListValidationError, Graph, load_edge_list, write_edge_list
from slimgraph.metrics import ALGORITHMS, compare_run, run_algorithm
from slimgraph.schemes import SCHEMES, ConfigurationError, DegenerateInputError, SchemeConfig, compress

log = logging.getLogger("slimgraph")

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2
SCHEME_PARAMS = ("p", "x", "variant", "k", "epsilon", "upsilon_mode", "threshold", "iterations")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse already exits 2; keep message on stderr
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_load_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=True,
                   help="treat each line as an undirected edge (default on)")
    p.add_argument("--weighted", action=argparse.BooleanOptionalAction, default=None,
                   help="force weighted/unweighted parsing (default: auto-detect)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true",
                   help="serial fixed-order execution; timing fields are omitted")


def _add_scheme_flags(p: argparse.ArgumentParser, *, required: bool = True) -> None:
    p.add_argument("--scheme", required=required,
                   choices=[s.replace("_", "-") for s in SCHEMES] + ["low_degree"])
    p.add_argument("--p", type=float)
    p.add_argument("--x", type=int)
    p.add_argument("--variant")
    p.add_argument("--k", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--upsilon-mode", dest="upsilon_mode")
    p.add_argument("--threshold", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--literal-eo", action="store_true", help="Edge-Once kernel read literally")
    p.add_argument("--cluster-pairs", action="store_true",
                   help="spanner keeps one edge per cluster pair instead of per vertex")


def _add_algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--probes", type=int, default=16)
    p.add_argument("--damping", type=float, default=0.85)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slimgraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compress", help="compress an edge list")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--stats", help="stats sidecar path (default: OUTPUT.stats.json)")
    _add_scheme_flags(c)
    _add_run_flags(c)
    _add_load_flags(c)

    e = sub.add_parser("eval", help="run one algorithm and print its result as JSON")
    e.add_argument("graph")
    e.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    _add_algo_flags(e)
    _add_run_flags(e)
    _add_load_flags(e)

    m = sub.add_parser("compare", help="compare an algorithm on original vs compressed graphs")
    m.add_argument("original")
    m.add_argument("compressed")
    m.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    m.add_argument("--stats", help="stats sidecar of the compressed graph")
    m.add_argument("--format", choices=("json", "csv"), default="json")
    _add_algo_flags(m)
    _add_run_flags(m)
    _add_load_flags(m)

    s = sub.add_parser("sweep", help="compress/evaluate/compare over a parameter grid")
    s.add_argument("input")
    s.add_argument("--grid", action="append", default=[], metavar="NAME=V1,V2,...",
                   help="parameter values to sweep; repeat for a product grid")
    s.add_argument("--algo", action="append", required=True, choices=sorted(ALGORITHMS))
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--fixed-seed", action="store_true", help="every trial uses --seed")
    s.add_argument("--out", required=True, help="per-trial CSV")
    s.add_argument("--aggregate", help="per-grid-point CSV (default: OUT with .agg.csv)")
    s.add_argument("--bootstrap", type=int, default=1000, help="bootstrap resamples for the CI")
    _add_scheme_flags(s)
    _add_algo_flags(s)
    _add_run_flags(s)
    _add_load_flags(s)
    return parser


def _load(path: str, args: argparse.Namespace) -> Graph:
    return load_edge_list(path, symmetrize=args.symmetrize, weighted=args.weighted)


def _scheme_config(args: argparse.Namespace, overrides: dict[str, Any] | None = None,
                   seed: int | None = None) -> SchemeConfig:
    params = {name: getattr(args, name) for name in SCHEME_PARAMS}
    params.update(overrides or {})
    return SchemeConfig.create(args.scheme, seed=args.seed if seed is None else seed,
                               literal_eo=args.literal_eo, cluster_pairs=args.cluster_pairs,
                               **params)


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _clean(values: Sequence[float]) -> list[float | None]:
    return [float(v) if math.isfinite(v) else None for v in values]


# ----------------------------------------------------------------------
# commands


def cmd_compress(args: argparse.Namespace) -> int:
    config = _scheme_config(args)
    g = _load(args.input, args)
    cfg = RunConfig(seed=args.seed, deterministic=args.deterministic)
    result = compress(g, config, cfg)
    write_edge_list(result.graph, args.output)
    stats_path = args.stats or f"{args.output}.stats.json"
    Path(stats_path).write_text(_dump_json(result.stats.to_dict(timing=not args.deterministic)))
    if result.summary is not None:
        Path(f"{args.output}.summary.json").write_text(_dump_json(result.summary.to_dict()))
    return EXIT_OK


def evaluate(g: Graph, algo: str, params: dict[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {"algorithm": algo}
    if algo == "bfs":
        res = run_algorithm(g, algo, params)
        reached = res.level >= 0
        out.update(root=res.root, reached=int(reached.sum()),
                   max_level=int(res.level.max()) if g.n else 0,
                   levels=res.level.tolist(), parents=res.parent.tolist())
        return out
    if algo == "cc":
        count, comp = alg.connected_components(g)
        out.update(components=count, component_of=comp.tolist())
        return out
    if algo in ("tc", "tcv"):
        t, per = alg.triangle_count(g)
        out.update(triangles=t, per_vertex=per.tolist())
        return out
    value = run_algorithm(g, algo, params)
    if np.ndim(value) == 0:
        key = {"mst": "mst_weight", "coloring": "colors", "matching": "matching_size",
               "mis": "mis_size", "diameter": "diameter_estimate"}[algo]
        out[key] = value
        return out
    vec = np.asarray(value, dtype=np.float64)
    key = {"sssp": "distances", "pagerank": "pagerank", "bc": "betweenness", "degree": "degrees"}[algo]
    finite = vec[np.isfinite(vec)]
    out[key] = _clean(vec.tolist())
    out["summary"] = {
        "n": len(vec),
        "min": float(finite.min()) if len(finite) else None,
        "max": float(finite.max()) if len(finite) else None,
        "mean": float(finite.mean()) if len(finite) else None,
    }
    return out


def _algo_params(args: argparse.Namespace) -> dict[str, Any]:
    return {"root": args.root, "probes": args.probes, "damping": args.damping, "seed": args.seed}


def cmd_eval(args: argparse.Namespace) -> int:
    g = _load(args.graph, args)
    sys.stdout.write(_dump_json(evaluate(g, args.algo, _algo_params(args))))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    g = _load(args.original, args)
    gc = _load(args.compressed, args)
    echo = None
    target_n, same = g.n, None
    if args.stats:
        stats = json.loads(Path(args.stats).read_text())
        echo = stats.get("scheme_echo")
        if "vertex_map" in stats.get("extra", {}):
            # collapsed graphs live in a renumbered vertex space
            target_n, same = stats["vertices_after"], False
    report = compare_run(g, _pad(gc, target_n), args.algo, _algo_params(args), echo,
                         same_vertex_set=same)
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_csv())
    return EXIT_OK


def _pad(g: Graph, n: int) -> Graph:
    """Re-attach trailing isolated vertices, which an edge list cannot express."""
    if n <= g.n:
        return g
    return Graph.from_edges(n, g.edge_array, g.edge_weights if g.weighted else None)


# ----------------------------------------------------------------------
# sweep


def _parse_value(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_grid(specs: Sequence[str]) -> list[dict[str, Any]]:
    axes = []
    for spec in specs:
        name, sep, values = spec.partition("=")
        name = name.strip().replace("-", "_")
        if not sep or not values or name not in SCHEME_PARAMS:
            raise ConfigurationError(f"bad --grid entry {spec!r}; expected NAME=V1,V2 with NAME in {SCHEME_PARAMS}")
        axes.append([(name, _parse_value(v.strip())) for v in values.split(",")])
    if not axes:
        return [{}]
    return [dict(combo) for combo in itertools.product(*axes)]


@dataclass
class _Task:
    graph: Graph
    config: SchemeConfig
    trial: int
    algos: list[str]
    params: dict[str, Any]
    deterministic: bool


def _run_task(task: _Task) -> list[list[Any]]:
    cfg = RunConfig(seed=task.config.seed, deterministic=task.deterministic)
    result = compress(task.graph, task.config, cfg)
    same = result.vertex_map is None
    rows = []
    for algo in task.algos:
        t0 = time.perf_counter()
        report = compare_run(task.graph, result.graph, algo, task.params,
                             task.config.to_dict(), same_vertex_set=same)
        algo_seconds = time.perf_counter() - t0
        for entry in report.entries:
            rows.append([task.config.scheme, task.config.params_label(), task.trial,
                         result.stats.edges_after, result.stats.wall_time, algo_seconds,
                         algo, entry.name, entry.value])
    return rows


def bootstrap_ci(values: Sequence[float], resamples: int, seed: int) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) == 1:
        return float(arr[0]), float(arr[0])
    rng = np.random.default_rng(seed)
    means = arr[rng.integers(0, len(arr), size=(resamples, len(arr)))].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return float(lo), float(hi)


def _fmt(v: Any) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise ConfigurationError("--trials must be >= 1")
    grid = parse_grid(args.grid)
    g = _load(args.input, args)
    params = _algo_params(args)
    tasks = []
    for point in grid:
        for trial in range(args.trials):
            seed = args.seed if args.fixed_seed else args.seed + trial
            config = _scheme_config(args, point, seed=seed)
            tasks.append(_Task(g, config, trial, list(args.algo), params, args.deterministic))

    workers = RunConfig(deterministic=args.deterministic).worker_count()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    timing = not args.deterministic
    header = ["scheme", "params", "trial", "edges_after", "compress_seconds", "algo_seconds",
              "algorithm", "metric", "value"]
    groups: dict[tuple[str, str, str, str], list[float | None]] = {}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rows in results:
            for row in rows:
                if not timing:
                    row[4] = row[5] = ""
                w.writerow([v if v == "" else _fmt(v) for v in row])
                groups.setdefault((row[0], row[1], row[6], row[7]), []).append(row[8])

    agg_path = args.aggregate or str(Path(args.out).with_suffix("")) + ".agg.csv"
    with open(agg_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "params", "algorithm", "metric", "trials", "defined",
                    "mean", "ci95_low", "ci95_high"])
        for i, ((scheme, label, algo, metric), vals) in enumerate(groups.items()):
            defined = [v for v in vals if v is not None]
            if defined:
                mean = float(np.mean(defined))
                lo, hi = bootstrap_ci(defined, args.bootstrap, args.seed + i)
            else:
                mean = lo = hi = None
            w.writerow([scheme, label, algo, metric, len(vals), len(defined),
                        _fmt(mean), _fmt(lo), _fmt(hi)])
    return EXIT_OK


COMMANDS = {"compress": cmd_compress, "eval": cmd_eval, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, DegenerateInputError) as exc:
        print(f"slimgraph: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EdgeListParseError, EdgeListValidationError) as exc:
        print(f"slimgraph: parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"slimgraph: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
