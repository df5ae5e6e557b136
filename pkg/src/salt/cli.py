"""``salt`` command line: preprocess, query, bench-p2p, bench-knn, dynamic-sim."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import bench
from .engine import SaltIndex, load_index, reordered, save_index
from .errors import SaltError
from .generators import grid_graph, grid_metrics, road_graph
from .graph import INF, TRAVEL_DISTANCE, TRAVEL_TIME, Graph, parse_dimacs_co, parse_dimacs_gr
from .knn import knn_query
from .landmarks import DEFAULT_LANDMARKS
from .overlay import FORWARD, REVERSE
from .p2p import BI, UNI, bi_alt, crp_query, dijkstra_p2p, salt_p2p
from .partition import CONTINENTAL_LEVEL_SPEC, bisect_partition, default_level_spec, load_partition_file
from .sssp import one_to_all, one_to_many, range_query

METRICS = {"tt": TRAVEL_TIME, "td": TRAVEL_DISTANCE}
SUMMARY_FILE = "index.json"
DEFAULT_INDEX = "salt-index"

# reference numbers quoted next to desk measurements, never compared
REFERENCE_PREPROCESS = "reference (Europe, travel time): GS phase 11.1 s, landmark phase 2.6 s, total 13.7 s"
REFERENCE_QUERY = "reference (Europe, travel time): CRP 1.6 ms, uniSALT-p2p 0.6 ms, biSALT-p2p 0.9 ms"


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load_input(args) -> Graph:
    metric = METRICS[args.metric]
    if args.generate:
        kind, _, size = args.generate.partition(":")
        try:
            size_n = int(size)
        except ValueError:
            raise UsageError(f"--generate expects grid:K or road:SIDE, got {args.generate!r}")
        if kind == "grid":
            g = grid_graph(size_n)
            return g.with_metric(grid_metrics(g, args.seed)[metric])
        if kind == "road":
            g, metrics = road_graph(size_n, args.seed)
            return g.with_metric(metrics[metric])
        raise UsageError(f"unknown generator {kind!r}")
    if not args.graph:
        raise UsageError("preprocess needs --graph or --generate")
    with open(args.graph) as f:
        g = parse_dimacs_gr(f, source=args.graph, metric_tag=metric)
    if args.coords:
        with open(args.coords) as f:
            coords = parse_dimacs_co(f, g.vertex_count, source=args.coords)
        g = Graph(g.offsets, g.heads, g.weights, coords, g.metric_tag)
    return g


def _level_spec(args, n: int):
    if args.levels is None:
        return None
    if args.levels == "continental":
        return CONTINENTAL_LEVEL_SPEC
    if args.levels == "default":
        return default_level_spec(n)
    return _int_list(args.levels)


def cmd_preprocess(args) -> int:
    t_start = time.perf_counter()
    graph = _load_input(args)
    spec = _level_spec(args, graph.vertex_count)
    t0 = time.perf_counter()
    if args.partition and args.partition != "builtin":
        with open(args.partition) as f:
            hierarchy = load_partition_file(f, graph, spec, source=args.partition)
    else:
        hierarchy = bisect_partition(graph, spec or default_level_spec(graph.vertex_count), seed=args.seed)
    t_part = time.perf_counter() - t0
    perm = None
    if not args.no_reorder:
        graph, hierarchy, perm = reordered(graph, hierarchy)
    index = SaltIndex.build(
        graph,
        hierarchy,
        landmark_count=args.landmarks,
        arc_reduction=not args.no_arc_reduction,
        seed=args.seed,
    )
    index.permutation = perm
    out = Path(args.out)
    save_index(index, out)
    t = index.timings
    summary = {
        "metric": graph.metric_tag,
        "vertices": graph.vertex_count,
        "arcs": graph.arc_count,
        "level_spec": list(hierarchy.level_spec),
        "landmarks": index.table.landmarks.tolist(),
        "arc_reduction": not args.no_arc_reduction,
        "reordered": perm is not None,
        "seed": args.seed,
        "timings": {"partition": t_part, **t, "wall": time.perf_counter() - t_start},
    }
    (out / SUMMARY_FILE).write_text(json.dumps(summary, indent=2) + "\n")
    print(bench.format_table(
        ("phase", "seconds"),
        [
            ("GS customization", f"{t['customization']:.3f}"),
            ("landmarks", f"{t['landmarks']:.3f}"),
            ("total", f"{t['total']:.3f}"),
        ],
    ))
    print(f"# {REFERENCE_PREPROCESS}")
    print(f"# n={graph.vertex_count} m={graph.arc_count} levels={','.join(map(str, hierarchy.level_spec))} -> {out}")
    return 0


def _open_index(args) -> SaltIndex:
    directory = Path(args.index)
    tag = TRAVEL_TIME
    meta = directory / SUMMARY_FILE
    if meta.exists():
        tag = json.loads(meta.read_text()).get("metric", TRAVEL_TIME)
    return load_index(directory, tag)


def _write_summary(path: str | None, data: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(data, indent=2, default=str) + "\n")


def _vertex(index: SaltIndex, v: int, parser) -> int:
    n = index.graph.vertex_count
    if not 0 <= v < n:
        parser.error(f"vertex id {v} outside [0, {n})")
    return v if index.permutation is None else int(index.permutation.old_to_new[v])


def _external(index: SaltIndex, v: int) -> int:
    return v if index.permutation is None else int(index.permutation.new_to_old[v])


def _fmt(d: int) -> str:
    return "inf" if d >= INF else str(d)


def _read_ids(path: str) -> list[int]:
    with open(path) as f:
        return [int(line.split()[0]) for line in f if line.strip() and not line.startswith("#")]


def cmd_query(args, parser) -> int:
    index = _open_index(args)
    s = _vertex(index, args.s, parser)
    direction = REVERSE if args.reverse else FORWARD
    kind = args.kind
    if kind == "p2p":
        if args.t is None:
            parser.error("p2p needs -t")
        t = _vertex(index, args.t, parser)
        engine = args.engine
        if engine == "dijkstra":
            res = dijkstra_p2p(index.graph, s, t)
        elif engine == "alt":
            res = bi_alt(index.graph, index.reverse, index.table, s, t)
        elif engine == "crp":
            res = crp_query(index, s, t)
        else:
            res = salt_p2p(index, s, t, BI if engine == "bi" else UNI)
        print(_fmt(res.distance))
    elif kind == "sssp":
        dist = one_to_all(index, s, direction)
        rows = sorted((_external(index, v), d) for v, d in enumerate(dist.tolist()))
        for v, d in rows:
            print(f"{v}\t{_fmt(d)}")
    elif kind == "range":
        if args.limit is None or args.limit < 0:
            parser.error("range needs a non-negative --limit")
        rows = sorted((_external(index, v), d) for v, d in range_query(index, s, args.limit, direction))
        for v, d in rows:
            print(f"{v}\t{d}")
    elif kind == "many":
        ids = list(args.targets or []) + (_read_ids(args.targets_file) if args.targets_file else [])
        if not ids:
            parser.error("many needs --targets or --targets-file")
        targets = [_vertex(index, v, parser) for v in ids]
        for t, d in one_to_many(index, s, targets, direction):
            print(f"{_external(index, t)}\t{_fmt(d)}")
    elif kind == "knn":
        if not args.objects:
            parser.error("knn needs --objects")
        objects = [_vertex(index, v, parser) for v in _read_ids(args.objects)]
        if not objects:
            parser.error("object file is empty")
        if args.k < 1:
            parser.error("k must be at least 1")
        res = knn_query(index, s, objects, args.k, reload=not args.no_reload)
        for o, d in res.items:
            print(f"{_external(index, o)}\t{d}")
    return 0


def cmd_bench_p2p(args) -> int:
    index = _open_index(args)
    config = bench.BenchConfig(seed=args.seed, pairs=args.pairs)
    pairs = bench.random_pairs(index.graph.vertex_count, config.pairs, config.seed)
    report = bench.bench_p2p(index, pairs, args.engines)
    print(bench.format_table(("engine", "mean_ms", "median_ms", "median_settled", "mean_settled"), report.rows()))
    st = report.engines
    if "uni_salt" in st:
        uni = max(st["uni_salt"].median_settled, 1.0)
        for other in ("crp", "bi_alt", "dijkstra"):
            if other in st:
                print(f"# settled ratio {other}/uni_salt = {st[other].median_settled / uni:.2f}")
    print(f"# {report.pairs} pairs, zero disagreements")
    print(f"# {REFERENCE_QUERY}")
    _write_summary(args.summary, report.summary())
    return 0


def cmd_bench_knn(args) -> int:
    index = _open_index(args)
    n = index.graph.vertex_count
    config = bench.BenchConfig(
        seed=args.seed,
        object_sizes=args.sizes,
        ks=args.ks,
        object_sets=args.sets,
        queries_per_set=args.queries,
        ball_sizes=args.ball_sizes,
        ball_objects=args.ball_objects,
    )
    uni = bench.uniform_trials(n, config.object_sizes, config.ks, config.object_sets, config.queries_per_set, config.seed)
    report = bench.bench_knn(index, uni)
    head = ("distribution", "objects", "ball", "k", "trials", "salt_ms", "dijkstra_ms", "pruned")
    rows = list(report.rows)
    total = report.trials
    if not args.no_ball:
        count = config.ball_objects or min(2**14, max(1, n // 2))
        sizes = config.ball_sizes or tuple(bench.ball_sizes_for(n, count))
        balls = bench.ball_trials(index.graph, count, sizes, config.ks, config.object_sets, config.queries_per_set, config.seed)
        ball_report = bench.bench_knn(index, balls)
        rows += ball_report.rows
        total += ball_report.trials
    print(bench.format_table(head, rows))
    print(f"# {total} trials, zero disagreements")
    _write_summary(args.summary, {"trials": total, "rows": [dict(zip(head, r)) for r in rows]})
    return 0


def cmd_dynamic_sim(args) -> int:
    index = _open_index(args)
    print("\t".join(("cycle", "customization_s", "landmarks_s", "total_s", "p2p_probes", "knn_probes", "fresh_equal")))

    def show(row: bench.CycleReport) -> None:
        print(
            f"{row.cycle}\t{row.customization:.3f}\t{row.landmarks:.3f}\t{row.total:.3f}\t"
            f"{row.p2p_probes}\t{row.knn_probes}\t{row.fresh_equal if row.fresh_equal is not None else '-'}",
            flush=True,
        )

    rows = bench.dynamic_sim(
        index,
        args.percent,
        args.cycles,
        seed=args.seed,
        fraction=args.fraction,
        probe_pairs=args.probe_pairs,
        probe_knn=args.probe_knn,
        fresh_check=not args.no_fresh_check,
        report=show,
    )
    print("# reference: full re-preprocessing stays below 19 s at continental scale")
    _write_summary(args.summary, {"cycles": [r.__dict__ for r in rows]})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="salt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", help="partition, customize and build landmarks; write snapshots")
    pre.add_argument("--graph", help="DIMACS .gr file")
    pre.add_argument("--coords", help="DIMACS .co file")
    pre.add_argument("--generate", help="synthetic input instead of --graph: grid:K or road:SIDE")
    pre.add_argument("--partition", default="builtin", help="partition file, or 'builtin' for coordinate bisection")
    pre.add_argument("--levels", help="cells per level from level 1 up (e.g. 128,64,32,16), 'continental' or 'default'")
    pre.add_argument("--landmarks", type=int, default=DEFAULT_LANDMARKS)
    pre.add_argument("--metric", choices=sorted(METRICS), default="tt")
    pre.add_argument("--seed", type=int, default=0)
    pre.add_argument("--out", default=DEFAULT_INDEX)
    pre.add_argument("--no-reorder", action="store_true", help="keep input vertex ids")
    pre.add_argument("--no-arc-reduction", action="store_true")

    def index_opt(p):
        p.add_argument("--index", default=DEFAULT_INDEX, help="directory written by preprocess")

    q = sub.add_parser("query", help="single query; tab-separated output")
    q.add_argument("kind", choices=("p2p", "sssp", "range", "many", "knn"))
    index_opt(q)
    q.add_argument("-s", type=int, required=True)
    q.add_argument("-t", type=int)
    q.add_argument("-k", type=int, default=1)
    q.add_argument("--engine", choices=("uni", "bi", "crp", "alt", "dijkstra"), default="uni")
    q.add_argument("--limit", type=int)
    q.add_argument("--targets", type=_int_list)
    q.add_argument("--targets-file")
    q.add_argument("--objects", help="file with one object vertex id per line")
    q.add_argument("--reverse", action="store_true", help="distances to s instead of from s")
    q.add_argument("--no-reload", action="store_true")

    bp = sub.add_parser("bench-p2p", help="random-pair campaign over all p2p engines")
    index_opt(bp)
    bp.add_argument("--pairs", type=int, default=1000)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--engines", type=lambda s: tuple(s.split(",")), default=bench.P2P_ENGINES)
    bp.add_argument("--summary", help="write a JSON summary here")

    bk = sub.add_parser("bench-knn", help="uniform and ball-restricted kNN campaigns")
    index_opt(bk)
    bk.add_argument("--sizes", type=_int_list, default=bench.OBJECT_SIZES)
    bk.add_argument("--ks", type=_int_list, default=bench.KS)
    bk.add_argument("--sets", type=int, default=10)
    bk.add_argument("--queries", type=int, default=10)
    bk.add_argument("--ball-sizes", type=_int_list)
    bk.add_argument("--ball-objects", type=int)
    bk.add_argument("--no-ball", action="store_true")
    bk.add_argument("--seed", type=int, default=0)
    bk.add_argument("--summary")

    dy = sub.add_parser("dynamic-sim", help="perturb weights, recustomize, probe")
    index_opt(dy)
    dy.add_argument("--percent", type=float, default=20.0)
    dy.add_argument("--fraction", type=float, default=1.0, help="share of arcs perturbed per cycle")
    dy.add_argument("--cycles", type=int, default=10)
    dy.add_argument("--probe-pairs", type=int, default=100)
    dy.add_argument("--probe-knn", type=int, default=100)
    dy.add_argument("--no-fresh-check", action="store_true")
    dy.add_argument("--seed", type=int, default=0)
    dy.add_argument("--summary")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "preprocess":
            return cmd_preprocess(args)
        if args.command == "query":
            return cmd_query(args, parser)
        if args.command == "bench-p2p":
            return cmd_bench_p2p(args)
        if args.command == "bench-knn":
            return cmd_bench_knn(args)
        return cmd_dynamic_sim(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (SaltError, OSError, ValueError) as exc:
        print(f"salt: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
