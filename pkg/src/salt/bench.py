"""Benchmark campaigns: random-pair p2p, random-object kNN and dynamic re-customization.

Every campaign checks its answers against an oracle and aborts on the first
disagreement; timings are only reported. Random draws come from numpy's PCG64
seeded with ``[seed, ...]`` lists, so a campaign replays exactly from its seed.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .dijkstra import dijkstra
from .engine import SaltIndex
from .errors import SaltError
from .graph import INF, Graph, Metric
from .knn import ObjectSet, knn_oracle, knn_query
from .p2p import BI, UNI, P2PResult, bi_alt, crp_query, dijkstra_p2p, salt_p2p

P2P_ENGINES = ("dijkstra", "bi_alt", "crp", "uni_salt", "bi_salt")
KS = (1, 2, 4, 8, 16)
OBJECT_SIZES = tuple(2**e for e in range(4, 11))


class BenchmarkMismatch(SaltError):
    """An engine disagreed with the oracle; ``detail`` names the pair or trial."""

    def __init__(self, message: str, detail: dict):
        super().__init__(f"{message}: {detail}")
        self.detail = detail


def make_rng(*seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(list(seed)))


@dataclass
class BenchConfig:
    seed: int = 0
    pairs: int = 1000
    object_sizes: tuple[int, ...] = OBJECT_SIZES
    ks: tuple[int, ...] = KS
    object_sets: int = 10
    queries_per_set: int = 10
    ball_sizes: tuple[int, ...] | None = None
    ball_objects: int | None = None

    def __post_init__(self):
        counts = [self.pairs, self.object_sets, self.queries_per_set, *self.object_sizes, *self.ks]
        counts += list(self.ball_sizes or ()) + ([self.ball_objects] if self.ball_objects is not None else [])
        if min(counts) < 1:
            raise ValueError("all benchmark counts must be positive")


# -- point-to-point ---------------------------------------------------------


def random_pairs(n: int, count: int, seed: int) -> list[tuple[int, int]]:
    rng = make_rng(seed, 1)
    st = rng.integers(0, n, size=(count, 2))
    return [(int(s), int(t)) for s, t in st]


def run_p2p(index: SaltIndex, engine: str, s: int, t: int) -> P2PResult:
    if engine == "dijkstra":
        return dijkstra_p2p(index.graph, s, t)
    if engine == "bi_alt":
        return bi_alt(index.graph, index.reverse, index.table, s, t)
    if engine == "crp":
        return crp_query(index, s, t)
    if engine == "uni_salt":
        return salt_p2p(index, s, t, UNI)
    if engine == "bi_salt":
        return salt_p2p(index, s, t, BI)
    raise ValueError(f"unknown engine {engine!r}")


@dataclass
class EngineStats:
    times: list[float] = field(default_factory=list)
    settled: list[int] = field(default_factory=list)

    @property
    def mean_ms(self) -> float:
        return 1000 * statistics.fmean(self.times) if self.times else 0.0

    @property
    def median_ms(self) -> float:
        return 1000 * statistics.median(self.times) if self.times else 0.0

    @property
    def median_settled(self) -> float:
        return float(statistics.median(self.settled)) if self.settled else 0.0

    @property
    def mean_settled(self) -> float:
        return statistics.fmean(self.settled) if self.settled else 0.0


@dataclass
class P2PReport:
    engines: dict[str, EngineStats]
    pairs: int

    def rows(self) -> list[tuple]:
        return [
            (name, f"{st.mean_ms:.3f}", f"{st.median_ms:.3f}", f"{st.median_settled:g}", f"{st.mean_settled:.1f}")
            for name, st in self.engines.items()
        ]

    def summary(self) -> dict:
        return {
            "pairs": self.pairs,
            "engines": {
                name: {
                    "mean_ms": st.mean_ms,
                    "median_ms": st.median_ms,
                    "median_settled": st.median_settled,
                    "mean_settled": st.mean_settled,
                }
                for name, st in self.engines.items()
            },
        }


def bench_p2p(index: SaltIndex, pairs: Sequence[tuple[int, int]], engines: Sequence[str] = P2P_ENGINES) -> P2PReport:
    """Run every engine on every pair; the first engine is the reference."""
    stats = {name: EngineStats() for name in engines}
    for s, t in pairs:
        ref = None
        for name in engines:
            t0 = time.perf_counter()
            res = run_p2p(index, name, s, t)
            stats[name].times.append(time.perf_counter() - t0)
            stats[name].settled.append(res.settled)
            if ref is None:
                ref = (name, res.distance)
            elif res.distance != ref[1]:
                raise BenchmarkMismatch(
                    "p2p disagreement",
                    {"s": s, "t": t, ref[0]: ref[1], name: res.distance},
                )
    return P2PReport(stats, len(pairs))


# -- kNN --------------------------------------------------------------------


def dijkstra_ball(graph: Graph, center: int, size: int) -> np.ndarray:
    """The first ``size`` vertices settled by Dijkstra from ``center`` (ties by id)."""
    dist = np.asarray(dijkstra(graph, center)[0], dtype=np.int64)
    order = np.lexsort((np.arange(len(dist)), dist))
    reach = order[dist[order] != INF]
    return reach[:size]


@dataclass(frozen=True)
class KnnTrial:
    distribution: str  # "uniform" or "ball"
    object_count: int
    ball_size: int | None
    k: int
    s: int
    objects: tuple[int, ...]
    seed: tuple[int, ...]


def uniform_trials(
    n: int, sizes: Sequence[int], ks: Sequence[int], sets: int, queries: int, seed: int
) -> Iterator[KnnTrial]:
    """``sets`` random object sets per size, ``queries`` query locations per set, every k."""
    for size in sizes:
        size = min(size, n)
        for j in range(sets):
            key = (seed, 2, size, j)
            rng = make_rng(*key)
            objects = tuple(int(x) for x in rng.choice(n, size=size, replace=False))
            for q in rng.integers(0, n, size=queries).tolist():
                for k in ks:
                    yield KnnTrial("uniform", size, None, k, int(q), objects, key)


def ball_sizes_for(n: int, object_count: int) -> list[int]:
    sizes, b = [], object_count
    while b < n:
        sizes.append(b)
        b *= 2
    return sizes + [n]


def ball_trials(
    graph: Graph,
    object_count: int,
    ball_sizes: Sequence[int],
    ks: Sequence[int],
    sets: int,
    queries: int,
    seed: int,
) -> Iterator[KnnTrial]:
    """Objects drawn from a Dijkstra ball of size |B| around a random center."""
    n = graph.vertex_count
    for size in ball_sizes:
        for j in range(sets):
            key = (seed, 3, object_count, size, j)
            rng = make_rng(*key)
            ball = dijkstra_ball(graph, int(rng.integers(0, n)), size)
            take = min(object_count, len(ball))
            objects = tuple(int(x) for x in rng.choice(ball, size=take, replace=False))
            for q in rng.integers(0, n, size=queries).tolist():
                for k in ks:
                    yield KnnTrial("ball", take, size, k, int(q), objects, key)


def same_up_to_ties(got: list[tuple[int, int]], want: list[tuple[int, int]]) -> bool:
    """Distance lists equal and, below the last distance, the same vertices per distance."""
    if [d for _, d in got] != [d for _, d in want]:
        return False
    if not want:
        return True
    last = want[-1][1]
    return {o for o, d in got if d != last} == {o for o, d in want if d != last}


@dataclass
class TrialOutcome:
    trial: KnnTrial
    result: list[tuple[int, int]]
    oracle: list[tuple[int, int]]
    pruned_fraction: float
    alive_ok: bool
    seconds: float
    oracle_seconds: float


def check_knn_trial(index: SaltIndex, trial: KnnTrial, reload: bool = True) -> TrialOutcome:
    objects = ObjectSet.from_vertices(index.hierarchy, trial.objects)
    t0 = time.perf_counter()
    res = knn_query(index, trial.s, objects, trial.k, reload=reload)
    t1 = time.perf_counter()
    oracle = knn_oracle(index.graph, trial.s, trial.objects, trial.k)
    t2 = time.perf_counter()
    alive = set(objects.vertices[res.alive].tolist())
    alive_ok = all(o in alive for o, _ in oracle)
    if not same_up_to_ties(res.items, oracle) or not alive_ok:
        raise BenchmarkMismatch(
            "kNN disagreement",
            {"seed": trial.seed, "s": trial.s, "k": trial.k, "salt": res.items, "oracle": oracle, "alive_ok": alive_ok},
        )
    return TrialOutcome(trial, res.items, oracle, res.pruned_fraction, alive_ok, t1 - t0, t2 - t1)


@dataclass
class KnnReport:
    rows: list[tuple]
    trials: int
    pruned: dict[tuple[str, int, int], list[float]]

    def summary(self) -> dict:
        head = ("distribution", "objects", "ball", "k", "trials", "salt_ms", "dijkstra_ms", "pruned")
        return {"trials": self.trials, "rows": [dict(zip(head, r)) for r in self.rows]}


def bench_knn(
    index: SaltIndex,
    trials: Iterator[KnnTrial],
    progress: Callable[[int], None] | None = None,
) -> KnnReport:
    groups: dict[tuple, list[TrialOutcome]] = {}
    count = 0
    for trial in trials:
        out = check_knn_trial(index, trial)
        groups.setdefault((trial.distribution, trial.object_count, trial.ball_size or 0, trial.k), []).append(out)
        count += 1
        if progress is not None:
            progress(count)
    rows = []
    pruned = {}
    for (dist, size, ball, k), outs in sorted(groups.items()):
        fr = [o.pruned_fraction for o in outs]
        pruned[(dist, size, k)] = pruned.get((dist, size, k), []) + fr
        rows.append(
            (
                dist,
                size,
                ball or "-",
                k,
                len(outs),
                f"{1000 * statistics.fmean(o.seconds for o in outs):.3f}",
                f"{1000 * statistics.fmean(o.oracle_seconds for o in outs):.3f}",
                f"{statistics.fmean(fr):.3f}",
            )
        )
    return KnnReport(rows, count, pruned)


# -- dynamic updates --------------------------------------------------------


def perturb(weights: np.ndarray, percent: float, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Scale a random ``fraction`` of the weights by factors in [1 - p, 1 + p], rounded, at least 1."""
    w = np.asarray(weights, dtype=np.int64).copy()
    if percent <= 0 or fraction <= 0:
        return w
    pick = rng.random(len(w)) < fraction
    factor = 1.0 + rng.uniform(-percent / 100.0, percent / 100.0, size=int(pick.sum()))
    w[pick] = np.maximum(1, np.rint(w[pick] * factor)).astype(np.int64)
    return w


@dataclass
class CycleReport:
    cycle: int
    customization: float
    landmarks: float
    total: float
    p2p_probes: int
    knn_probes: int
    fresh_equal: bool | None


def probe(index: SaltIndex, pairs: int, knn_trials: int, seed: int) -> tuple[int, int]:
    """Oracle checks on uniSALT/biSALT p2p and kNN; raises on the first failure."""
    n = index.graph.vertex_count
    sample = random_pairs(n, pairs, seed)
    bench_p2p(index, sample, ("dijkstra", "uni_salt", "bi_salt"))
    sizes = [s for s in OBJECT_SIZES if s <= n] or [n]
    stream = uniform_trials(n, sizes, KS, sets=knn_trials, queries=1, seed=seed)
    done = 0
    rng = make_rng(seed, 4)
    chosen = sorted(rng.choice(knn_trials * len(sizes) * len(KS), size=knn_trials, replace=False).tolist())
    wanted = set(chosen)
    for i, trial in enumerate(stream):
        if i in wanted:
            check_knn_trial(index, trial)
            done += 1
    return len(sample), done


def dynamic_sim(
    index: SaltIndex,
    percent: float,
    cycles: int,
    seed: int = 0,
    fraction: float = 1.0,
    probe_pairs: int = 100,
    probe_knn: int = 100,
    fresh_check: bool = True,
    report: Callable[[CycleReport], None] | None = None,
) -> list[CycleReport]:
    """Perturb, recustomize, probe; optionally compare with a from-scratch build on the same metric."""
    base = index.graph.weights
    tag = index.graph.metric_tag
    out = []
    current = index
    for cycle in range(1, cycles + 1):
        rng = make_rng(seed, 5, cycle)
        weights = perturb(base, percent, fraction, rng)
        current = current.recustomize(Metric(tag, weights))
        p, k = probe(current, probe_pairs, probe_knn, seed * 1000 + cycle)
        equal = None
        if fresh_check:
            fresh = SaltIndex.build(
                current.graph,
                current.hierarchy,
                landmarks=current.table.landmarks.tolist(),
                arc_reduction=current.forward.arc_reduction,
            )
            equal = fresh.pair == current.pair and fresh.table == current.table
            if not equal:
                raise BenchmarkMismatch("recustomized index differs from a fresh build", {"cycle": cycle})
        t = current.timings
        row = CycleReport(cycle, t["customization"], t["landmarks"], t["total"], p, k, equal)
        if report is not None:
            report(row)
        out.append(row)
    return out


def format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(str(x) for x in row) for row in rows]
    return "\n".join(lines)
