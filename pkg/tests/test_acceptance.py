"""Acceptance suite: one report line per criterion, oracle-checked at zero tolerance.

Instances are GRID-8 and a 2295-vertex synthetic road network that goes through
the DIMACS text format before use. A real DIMACS instance is added when
SALT_DIMACS_T (travel-time .gr), SALT_DIMACS_D (travel-distance .gr) and
SALT_DIMACS_CO (.co) point at readable files.
"""

import io
import os
import statistics
import struct

import numpy as np
import pytest

from salt import SaltIndex, bisect_partition, default_level_spec, grid_graph, grid_metrics, road_graph
from salt.bench import (
    KS,
    OBJECT_SIZES,
    P2P_ENGINES,
    ball_sizes_for,
    ball_trials,
    check_knn_trial,
    dynamic_sim,
    random_pairs,
    run_p2p,
    uniform_trials,
)
from salt.dijkstra import dijkstra
from salt.engine import reordered
from salt.graph import (
    INF,
    TRAVEL_DISTANCE,
    TRAVEL_TIME,
    Graph,
    parse_dimacs_co,
    parse_dimacs_gr,
    write_dimacs_co,
    write_dimacs_gr,
)
from salt.knn import ObjectSet, knn_query
from salt.landmarks import SENTINEL, lower_bound, lower_bounds_from, lower_bounds_to, save_landmarks, upper_bound
from salt.sssp import one_to_all, one_to_many, range_query
from salt.overlay import FORWARD, REVERSE

from conftest import make_index, report, rng

METRICS = (TRAVEL_TIME, TRAVEL_DISTANCE)
PAIRS = 1000
SOURCES = 50
DIMACS_ENV = ("SALT_DIMACS_T", "SALT_DIMACS_D", "SALT_DIMACS_CO")

# answers of suites 1-3 on the default index, replayed by criterion 6
ANSWERS: dict = {"p2p": {}, "sssp": {}, "knn": {}}
SETTLED: dict = {}
PRUNED: list[float] = []


def verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _index_with_order(graph: Graph, arc_reduction: bool = True) -> SaltIndex:
    h = bisect_partition(graph, default_level_spec(graph.vertex_count))
    g, h, _ = reordered(graph, h)
    return SaltIndex.build(g, h, arc_reduction=arc_reduction)


def _through_dimacs(graph: Graph) -> Graph:
    gr, co = io.StringIO(), io.StringIO()
    write_dimacs_gr(graph, gr)
    write_dimacs_co(graph.coordinates, co)
    gr.seek(0)
    co.seek(0)
    parsed = parse_dimacs_gr(gr, source="road.gr", metric_tag=graph.metric_tag)
    coords = parse_dimacs_co(co, parsed.vertex_count, source="road.co")
    return Graph(parsed.offsets, parsed.heads, parsed.weights, coords, parsed.metric_tag)


def _dimacs_from_env() -> dict[str, Graph] | None:
    paths = [os.environ.get(k) for k in DIMACS_ENV]
    if not all(paths) or not all(os.path.exists(p) for p in paths):
        return None
    out = {}
    for tag, path in zip(METRICS, paths[:2]):
        with open(path) as f:
            g = parse_dimacs_gr(f, source=path, metric_tag=tag)
        with open(paths[2]) as f:
            coords = parse_dimacs_co(f, g.vertex_count, source=paths[2])
        out[tag] = Graph(g.offsets, g.heads, g.weights, coords, tag)
    return out


def _graphs() -> dict[str, dict[str, Graph]]:
    grid = grid_graph(8)
    road, metrics = road_graph(48, seed=0)
    out = {
        "GRID-8": {tag: grid.with_metric(m) for tag, m in grid_metrics(grid, 8).items()},
        "road-2295": {tag: _through_dimacs(road.with_metric(metrics[tag])) for tag in METRICS},
    }
    real = _dimacs_from_env()
    if real is not None:
        out["dimacs"] = real
    return out


@pytest.fixture(scope="module")
def graphs():
    return _graphs()


@pytest.fixture(scope="module")
def indexes(graphs):
    out = {}
    for name, by_tag in graphs.items():
        if name == "GRID-8":
            out[name] = {tag: make_index(g) for tag, g in by_tag.items()}
        else:
            out[name] = {tag: _index_with_order(g) for tag, g in by_tag.items()}
    return out


@pytest.fixture(scope="module")
def unreduced(indexes):
    """Same graphs and partitions, arc reduction off, same landmarks."""
    out = {}
    for name, by_tag in indexes.items():
        out[name] = {
            tag: SaltIndex.build(
                idx.graph, idx.hierarchy, landmarks=idx.table.landmarks.tolist(), arc_reduction=False
            )
            for tag, idx in by_tag.items()
        }
    return out


def knn_suite(index: SaltIndex, name: str, tag: str):
    """Trials for criterion 3; GRID-8 gets a small batch since |O| saturates at 64."""
    n = index.graph.vertex_count
    if name == "GRID-8":
        yield from uniform_trials(n, (16, 32, 64), KS, sets=2, queries=4, seed=31)
        return
    seed = 7 if tag == TRAVEL_TIME else 8
    yield from uniform_trials(n, OBJECT_SIZES, KS, sets=8, queries=10, seed=seed)
    for size in OBJECT_SIZES:
        yield from ball_trials(index.graph, size, ball_sizes_for(n, size), KS, sets=3, queries=4, seed=seed)


# -- 1: p2p exactness -------------------------------------------------------


def test_c1_p2p_exactness(indexes):
    bad = []
    count = 0
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            pairs = random_pairs(idx.graph.vertex_count, PAIRS, seed=11)
            answers = {}
            stats = {e: [] for e in P2P_ENGINES}
            for s, t in pairs:
                got = {}
                for engine in P2P_ENGINES:
                    res = run_p2p(idx, engine, s, t)
                    got[engine] = res.distance
                    stats[engine].append(res.settled)
                if len(set(got.values())) != 1:
                    bad.append((name, tag, s, t, got))
                answers[(s, t)] = got["dijkstra"]
                count += 1
            ANSWERS["p2p"][(name, tag)] = answers
            SETTLED[(name, tag)] = stats
    report(
        f"criterion 1 [PRIMARY] p2p exactness: {verdict(not bad)}; {count} pairs x 5 engines "
        f"on {', '.join(indexes)} x {len(METRICS)} metrics, {len(bad)} disagreements"
    )
    assert not bad, bad[:5]


def test_c1_dimacs_instance_present(graphs):
    if "dimacs" not in graphs:
        pytest.skip(
            "no public DIMACS instance available offline; set SALT_DIMACS_T, SALT_DIMACS_D and "
            "SALT_DIMACS_CO to include one (the synthetic road network stands in)"
        )
    assert graphs["dimacs"][TRAVEL_TIME].vertex_count <= 1_000_000


# -- 2: SSSP exactness ------------------------------------------------------


def test_c2_sssp_exactness(indexes):
    bad = []
    checks = 0
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            n = idx.graph.vertex_count
            gen = rng(13, len(name), METRICS.index(tag))
            sources = gen.integers(0, n, size=SOURCES).tolist()
            for direction, base in ((FORWARD, idx.graph), (REVERSE, idx.reverse)):
                truth = {s: np.asarray(dijkstra(base, s)[0], dtype=np.int64) for s in sources}
                ecc = [int(d[d != INF].max()) for d in truth.values()]
                half = int(statistics.median(ecc)) // 2
                for s in sources:
                    want = truth[s]
                    got = one_to_all(idx, s, direction)
                    checks += 1
                    if not np.array_equal(got, want):
                        bad.append((name, tag, direction, "one_to_all", s))
                    for theta in (0, half, INF):
                        rq = range_query(idx, s, theta, direction)
                        exp = [(v, int(d)) for v, d in enumerate(want.tolist()) if d <= theta and d != INF]
                        checks += 1
                        if rq != exp:
                            bad.append((name, tag, direction, "range", s, theta))
                        ANSWERS["sssp"][(name, tag, direction, "range", s, theta)] = rq
                    targets = gen.choice(n, size=min(50, n), replace=False).tolist()
                    om = one_to_many(idx, s, targets, direction)
                    checks += 1
                    if om != [(t, int(want[t])) for t in targets]:
                        bad.append((name, tag, direction, "many", s))
                    ANSWERS["sssp"][(name, tag, direction, "all", s)] = got
                    ANSWERS["sssp"][(name, tag, direction, "many", s)] = (targets, om)
    report(
        f"criterion 2 [PRIMARY] SSSP exactness: {verdict(not bad)}; {checks} one_to_all/range/one_to_many "
        f"checks, {SOURCES} sources x 2 directions x {len(METRICS)} metrics per instance, {len(bad)} mismatches"
    )
    assert not bad, bad[:5]


# -- 3 and 4: kNN exactness and pruning safety ------------------------------


def test_c3_c4_knn_exactness_and_pruning_safety(indexes):
    failures, unsafe = [], 0
    count = 0
    by_kind = {"uniform": 0, "ball": 0}
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            answers = {}
            for trial in knn_suite(idx, name, tag):
                try:
                    out = check_knn_trial(idx, trial)
                except Exception as exc:  # BenchmarkMismatch carries the trial
                    failures.append((name, tag, str(exc)[:300]))
                    if "'alive_ok': False" in str(exc):
                        unsafe += 1
                    continue
                count += 1
                by_kind[trial.distribution] += 1
                answers[(trial.seed, trial.s, trial.k)] = out.result
                if trial.distribution == "uniform" and trial.object_count >= 1024 and trial.k <= 16:
                    PRUNED.append(out.pruned_fraction)
            ANSWERS["knn"][(name, tag)] = answers
    report(
        f"criterion 3 [PRIMARY] kNN exactness: {verdict(not failures and count >= 10_000)}; {count} trials "
        f"({by_kind['uniform']} uniform, {by_kind['ball']} ball-restricted), |O| 16..1024, k 1..16, "
        f"{len(failures)} mismatches"
    )
    report(
        f"criterion 4 [PRIMARY] pruning safety: {verdict(unsafe == 0 and not failures)}; "
        f"{count} trials, {unsafe} alive sets missing an oracle neighbour"
    )
    assert count >= 10_000
    assert not failures, failures[:3]


# -- 5: bound sandwich and potential feasibility ----------------------------


def _union_arcs(cz):
    """Original arcs, clique arcs of every level and the downward arcs of one direction."""
    yield from cz.graph.arcs()
    for lvl in range(1, cz.hierarchy.levels + 1):
        yield from cz.overlay.arcs(lvl)
        yield from cz.downward.arcs(lvl)


def test_c5_bounds_and_feasibility(indexes):
    violations = infeasible = arcs_checked = pairs = 0
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            n = idx.graph.vertex_count
            gen = rng(17, len(name), METRICS.index(tag))
            sources = gen.integers(0, n, size=100).tolist()
            for s in sources:
                d = dijkstra(idx.graph, s)[0]
                for t in gen.integers(0, n, size=100 // len(indexes) + 1).tolist():
                    pairs += 1
                    lo, hi = lower_bound(idx.table, s, t), upper_bound(idx.table, s, t)
                    if not lo <= d[t] <= hi:
                        violations += 1
            fwd = [(u, v, w) for u, v, w in _union_arcs(idx.forward)]
            rev = [(u, v, w) for u, v, w in _union_arcs(idx.backward)]
            for t in gen.integers(0, n, size=20).tolist():
                pi_f = lower_bounds_to(idx.table, t)
                pi_r = lower_bounds_from(idx.table, t)
                for u, v, w in fwd:
                    arcs_checked += 1
                    infeasible += w - pi_f[u] + pi_f[v] < 0
                for u, v, w in rev:
                    arcs_checked += 1
                    infeasible += w - pi_r[u] + pi_r[v] < 0
    ok = violations == 0 and infeasible == 0 and pairs >= 10_000
    report(
        f"criterion 5 [PRIMARY] bound sandwich: {verdict(ok)}; {pairs} pairs, {violations} sandwich violations; "
        f"{arcs_checked} union-graph arc checks over 20 targets per index, {infeasible} infeasible"
    )
    assert pairs >= 10_000
    assert violations == 0 and infeasible == 0


# -- 6: optimization invisibility -------------------------------------------


def test_c6_optimizations_invisible(indexes, unreduced):
    if not ANSWERS["p2p"] or not ANSWERS["sssp"] or not ANSWERS["knn"]:
        pytest.skip("needs the answers recorded by criteria 1-3 in the same run")
    diffs = {"arc_reduction": 0, "reload": 0}
    checked = {"arc_reduction": 0, "reload": 0}
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            plain = unreduced[name][tag]
            for (s, t), want in ANSWERS["p2p"][(name, tag)].items():
                for engine in ("crp", "uni_salt", "bi_salt"):
                    checked["arc_reduction"] += 1
                    diffs["arc_reduction"] += run_p2p(plain, engine, s, t).distance != want
            for key, want in ANSWERS["sssp"].items():
                if key[:2] != (name, tag):
                    continue
                _, _, direction, kind, s, *rest = key
                if kind == "all":
                    got = one_to_all(plain, s, direction)
                    same = np.array_equal(got, want)
                elif kind == "range":
                    same = range_query(plain, s, rest[0], direction) == want
                else:
                    targets, om = want
                    same = one_to_many(plain, s, targets, direction) == om
                checked["arc_reduction"] += 1
                diffs["arc_reduction"] += not same
            recorded = ANSWERS["knn"][(name, tag)]
            for trial in knn_suite(idx, name, tag):
                want = recorded[(trial.seed, trial.s, trial.k)]
                objects = ObjectSet.from_vertices(idx.hierarchy, trial.objects)
                checked["arc_reduction"] += 1
                diffs["arc_reduction"] += knn_query(plain, trial.s, objects, trial.k).items != want
                checked["reload"] += 1
                diffs["reload"] += knn_query(idx, trial.s, objects, trial.k, reload=False).items != want
    ok = not any(diffs.values())
    report(
        f"criterion 6 [PRIMARY] optimization invisibility: {verdict(ok)}; arc reduction off: "
        f"{checked['arc_reduction']} answers over suites 1-3, {diffs['arc_reduction']} differ; "
        f"queue reload off: {checked['reload']} kNN answers, {diffs['reload']} differ"
    )
    assert ok, diffs


# -- 7: dynamic correctness -------------------------------------------------


def test_c7_dynamic_recustomization(indexes):
    rows = []
    targets = [("road-2295", TRAVEL_TIME), ("road-2295", TRAVEL_DISTANCE), ("GRID-8", TRAVEL_TIME)]
    for name, tag in targets:
        rows += dynamic_sim(indexes[name][tag], percent=20, cycles=10, seed=19, probe_pairs=100, probe_knn=100)
    ok = all(r.fresh_equal for r in rows) and all(r.p2p_probes == 100 and r.knn_probes == 100 for r in rows)
    report(
        f"criterion 7 [PRIMARY] dynamic correctness: {verdict(ok)}; {len(rows)} cycles of +-20% weights on "
        f"{len(targets)} indexes, each probed with 100 pairs and 100 kNN trials and equal to a fresh build"
    )
    assert ok


# -- 8: relative work -------------------------------------------------------


def _medians():
    out = {}
    for key, stats in SETTLED.items():
        out[key] = {e: statistics.median(v) for e, v in stats.items()}
    return out


def _c8_line():
    med = _medians()
    core = all(m["uni_salt"] < m["crp"] < m["dijkstra"] for m in med.values())
    alt = all(m["uni_salt"] < m["bi_alt"] for m in med.values())
    parts = []
    for (name, tag), m in med.items():
        parts.append(
            f"{name}/{tag} uni {m['uni_salt']:g} crp {m['crp']:g} dij {m['dijkstra']:g} biALT {m['bi_alt']:g}"
            f" (x{m['crp'] / m['uni_salt']:.1f} vs CRP, x{m['bi_alt'] / m['uni_salt']:.1f} vs biALT)"
        )
    misses = [f"{n}/{t}" for (n, t), m in med.items() if not m["uni_salt"] < m["bi_alt"]]
    note = f"; uniSALT < biALT fails on {', '.join(misses)}" if misses else ""
    report(
        f"criterion 8 [PRIMARY] relative work (median settled): {verdict(core and alt)}; "
        + "; ".join(parts)
        + note
        + "; reference speedups 3-4x vs CRP and 100-266x vs ALT are context only"
    )


def test_c8_salt_below_crp_below_dijkstra():
    if not SETTLED:
        pytest.skip("needs the settled counts recorded by criterion 1")
    med = _medians()
    for key, m in med.items():
        assert m["uni_salt"] < m["crp"] < m["dijkstra"], (key, m)


def test_c8_salt_below_bialt():
    if not SETTLED:
        pytest.skip("needs the settled counts recorded by criterion 1")
    _c8_line()
    med = _medians()
    for key, m in med.items():
        assert m["uni_salt"] < m["bi_alt"], (key, m)


# -- 9: pruning effectiveness -----------------------------------------------


def test_c9_pruning_effectiveness():
    if not PRUNED:
        pytest.skip("needs the pruned fractions recorded by criterion 3")
    mean = statistics.fmean(PRUNED)
    warn = "" if mean >= 0.4 else " WARNING: below the 40% desk-scale expectation"
    report(
        f"criterion 9 [PRIMARY] pruning effectiveness (reported): PASS; mean pruned fraction {mean:.1%} "
        f"(median {statistics.median(PRUNED):.1%}) over {len(PRUNED)} uniform trials with |O| >= 1024, "
        f"k <= 16; reference: more than 60%{warn}"
    )


# -- 10: layout bit-exactness -----------------------------------------------


def test_c10_landmark_layout(indexes):
    bad = probes = 0
    for name, by_tag in indexes.items():
        for tag, idx in by_tag.items():
            table = idx.table
            S, n = table.landmark_count, table.vertex_count
            buf = io.BytesIO()
            save_landmarks(table, buf)
            raw = buf.getvalue()
            base = 8 + 4 + 4 * S
            gen = rng(23, len(name), METRICS.index(tag))
            for i, j in zip(gen.integers(0, n, size=100).tolist(), gen.integers(0, S, size=100).tolist()):
                L = int(table.landmarks[j])
                d_from = dijkstra(idx.graph, L)[0][i]
                d_to = dijkstra(idx.reverse, L)[0][i]
                want_from = -SENTINEL if d_from == INF else -d_from
                want_to = SENTINEL if d_to == INF else d_to
                (got_from,) = struct.unpack_from("<i", raw, base + 4 * (2 * S * i + j))
                (got_to,) = struct.unpack_from("<i", raw, base + 4 * (2 * S * i + S + j))
                probes += 1
                bad += got_from != want_from or got_to != want_to
    report(
        f"criterion 10 [PRIMARY] landmark layout bit-exactness: {verdict(bad == 0)}; {probes} (i, j) probes "
        f"against the serialized bytes, {bad} mismatches"
    )
    assert bad == 0
