"""Label-setting search over the union of overlay cliques and level-0 regions.

A vertex whose level-1 cell contains a marked vertex (query endpoint or
object) is scanned with all of its original arcs. Any other vertex v is
scanned at level l(v), the highest level whose cell of v holds no marked
vertex: it relaxes the level-l(v) clique arcs of its cell and the original
arcs leaving that cell.
"""

from __future__ import annotations

import heapq
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import StaleIndexError
from .graph import INF, Metric
from .overlay import FORWARD, Customization, CustomizationPair
from .partition import PartitionHierarchy


class SearchState:
    """Distance/parent labels with generation stamps, so a reset is O(1)."""

    __slots__ = ("dist", "parent", "stamp", "generation")

    def __init__(self, n: int):
        self.dist = [INF] * n
        self.parent = [-1] * n
        self.stamp = [0] * n
        self.generation = 1

    def reset(self) -> None:
        self.generation += 1

    def label(self, v: int) -> int:
        return self.dist[v] if self.stamp[v] == self.generation else INF

    def set(self, v: int, d: int, parent: int = -1) -> None:
        self.stamp[v] = self.generation
        self.dist[v] = d
        self.parent[v] = parent

    def labeled(self) -> list[int]:
        g = self.generation
        return [v for v, st in enumerate(self.stamp) if st == g]

    def distances(self) -> np.ndarray:
        g = self.generation
        return np.array([d if st == g else INF for d, st in zip(self.dist, self.stamp)], dtype=np.int64)

    def chain(self, t: int) -> list[int]:
        out = []
        while t != -1 and self.stamp[t] == self.generation:
            out.append(t)
            t = self.parent[t]
        return out[::-1]


def marks_from_level1(hierarchy: PartitionHierarchy, level1_cells: Iterable[int]) -> list[set[int]]:
    """Ancestor cells on every level, derived from level-1 cell ids alone."""
    marks: list[set[int]] = [set(), set(level1_cells)]
    for p in hierarchy.parents:
        marks.append({int(p[c]) for c in marks[-1]})
    return marks


def level_function(
    hierarchy: PartitionHierarchy,
    marked: Iterable[int] = (),
    marks: list[set[int]] | None = None,
) -> Callable[[int], int]:
    if marks is None:
        marks = hierarchy.ancestor_cells(marked)
    cells = hierarchy.cell_lists
    L = hierarchy.levels
    pairs = [(cells[lvl], marks[lvl]) for lvl in range(1, L + 1)]

    def level(v: int) -> int:
        lvl = 0
        for row, m in pairs:
            if row[v] in m:
                return lvl
            lvl += 1
        return lvl

    return level


def union_search(
    cz: Customization,
    sources: Sequence[int],
    marked: Iterable[int],
    target: int | None = None,
    limit: int | None = None,
    potential: Sequence[int] | None = None,
    state: SearchState | None = None,
) -> tuple[SearchState, int]:
    """Dijkstra (or A* when ``potential`` is given) from ``sources`` at distance 0.

    Returns the state and the settled count. With ``target`` the search stops
    once the smallest key reaches the target's key, so the target's label is
    final without popping vertices tied with it; with ``limit`` once the
    smallest key exceeds it.
    """
    n = cz.graph.vertex_count
    if state is None:
        state = SearchState(n)
    else:
        state.reset()
    level = level_function(cz.hierarchy, marked)
    adj0 = cz.graph.adjacency
    lout = cz.level_out
    dist, parent, stamp, gen = state.dist, state.parent, state.stamp, state.generation
    pot = potential
    done: set[int] = set()
    heap = []
    for s in sources:
        stamp[s] = gen
        dist[s] = 0
        parent[s] = -1
        heap.append((pot[s] if pot is not None else 0, s))
    heapq.heapify(heap)
    settled = 0
    while heap:
        key, u = heapq.heappop(heap)
        if u in done:
            continue
        if limit is not None and key > limit:
            break
        if target is not None and stamp[target] == gen and key >= dist[target] + (pot[target] if pot is not None else 0):
            break
        done.add(u)
        settled += 1
        du = dist[u]
        lvl = level(u)
        for v, w in adj0[u] if lvl == 0 else lout[lvl][u]:
            nd = du + w
            if stamp[v] != gen or nd < dist[v]:
                stamp[v] = gen
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd + pot[v] if pot is not None else nd, v))
    if target is not None or limit is not None:
        for v in state.labeled():
            if v not in done and v != target:
                stamp[v] = 0
    return state, settled


def pick(index, direction: str) -> Customization:
    """Accept a Customization, a CustomizationPair or a SaltIndex."""
    if isinstance(index, Customization):
        return index
    pair = index if isinstance(index, CustomizationPair) else index.pair
    return pair.forward if direction == FORWARD else pair.reverse


def ensure_current(index, metric: Metric | np.ndarray | None) -> None:
    if metric is None:
        return
    weights = metric.weights if isinstance(metric, Metric) else np.asarray(metric)
    if isinstance(index, Customization) and index.direction != FORWARD:
        raise StaleIndexError("metric checks need the forward customization")
    graph = pick(index, FORWARD).graph
    if len(weights) != graph.arc_count or not np.array_equal(weights, graph.weights):
        raise StaleIndexError("index was customized for a different metric")
