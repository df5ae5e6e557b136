"""SALT-kNN: landmark pruning followed by a multi-source search on the reverse graph.

The main phase searches from every surviving object at once toward the query
location ``s`` on the reverse union graph, with potential ``lower_bound(s, v)``.
Each label remembers the object it started from, so settling ``s`` names the
next nearest neighbor. Labels are ordered by (distance, origin id), which makes
equal-distance objects come out by ascending vertex id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InsufficientObjectsError
from .graph import INF, Graph
from .landmarks import LandmarkTable, lower_bounds_from, upper_bounds_from
from .p2p import source_potential
from .partition import PartitionHierarchy
from .overlay import FORWARD, REVERSE
from .search import level_function, marks_from_level1, pick


@dataclass(frozen=True, eq=False)
class ObjectSet:
    vertices: np.ndarray
    cells: np.ndarray  # level-1 cell of each object
    alive: np.ndarray

    @classmethod
    def from_vertices(cls, hierarchy: PartitionHierarchy, vertices: Iterable[int]) -> "ObjectSet":
        vs = np.unique(np.fromiter(vertices, dtype=np.int64))
        return cls(vs, hierarchy.level1[vs], np.ones(len(vs), dtype=bool))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def alive_vertices(self) -> np.ndarray:
        return self.vertices[self.alive]

    def subset(self, mask: np.ndarray) -> "ObjectSet":
        return ObjectSet(self.vertices, self.cells, self.alive & mask)


class BoundedMaxHeap:
    """Keeps the k smallest values pushed so far; ``top`` is the largest of them."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._heap: list[int] = []

    def __len__(self) -> int:
        return len(self._heap)

    def top(self) -> int:
        return -self._heap[0]

    def offer(self, value: int) -> None:
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, -value)
        elif value < -self._heap[0]:
            heapq.heapreplace(self._heap, -value)


def kth_lowest_upper_bound(table: LandmarkTable, s: int, objects: ObjectSet | np.ndarray, k: int) -> int:
    vertices = objects.vertices if isinstance(objects, ObjectSet) else np.asarray(objects)
    if k < 1 or len(vertices) < k:
        raise InsufficientObjectsError(f"need at least k={k} objects, got {len(vertices)}")
    heap = BoundedMaxHeap(k)
    for ub in upper_bounds_from(table, s, vertices).tolist():
        heap.offer(ub)
    return heap.top()


def pruning_phase(table: LandmarkTable, s: int, objects: ObjectSet, k: int) -> ObjectSet:
    """Keep the objects whose lower bound from ``s`` does not exceed the k-th lowest upper bound."""
    kth = kth_lowest_upper_bound(table, s, objects, k)
    return objects.subset(lower_bounds_from(table, s, objects.vertices) <= kth)


@dataclass
class KnnResult:
    items: list[tuple[int, int]]
    object_count: int = 0
    alive_count: int = 0
    settled: int = 0
    alive: np.ndarray | None = field(default=None, repr=False)

    @property
    def distances(self) -> list[int]:
        return [d for _, d in self.items]

    @property
    def vertices(self) -> list[int]:
        return [o for o, _ in self.items]

    @property
    def pruned_fraction(self) -> float:
        return 1.0 - self.alive_count / self.object_count if self.object_count else 0.0


class _MainPhase:
    """Search state of the main phase, kept across iterations for queue reloads."""

    def __init__(self, cz, s: int, sources: list[int], marks, potential):
        n = cz.graph.vertex_count
        self.s = s
        self.adj0 = cz.graph.adjacency
        self.lout = cz.level_out
        self.level = level_function(cz.hierarchy, marks=marks)
        self.pot = potential
        self.dist = [INF] * n
        self.origin = [-1] * n
        self.labeled: set[int] = set()
        self.heap: list[tuple[int, int, int]] = []
        self.settled = 0
        self.seed(sources)

    def seed(self, sources: Iterable[int]) -> None:
        for o in sources:
            self.dist[o] = 0
            self.origin[o] = o
            self.labeled.add(o)
            self.heap.append((self.pot[o], o, o))
        heapq.heapify(self.heap)

    def clear(self) -> None:
        for v in self.labeled:
            self.dist[v] = INF
            self.origin[v] = -1
        self.labeled.clear()
        self.heap.clear()

    def reload(self, removed: int) -> None:
        """Drop labels that came from ``removed`` and requeue every other label."""
        dist, origin, pot = self.dist, self.origin, self.pot
        keep = set()
        for v in self.labeled:
            if origin[v] == removed:
                dist[v] = INF
                origin[v] = -1
            else:
                keep.add(v)
        self.labeled = keep
        self.heap = [(dist[v] + pot[v], origin[v], v) for v in keep]
        heapq.heapify(self.heap)

    def run(self) -> tuple[int, int] | None:
        """Settle ``s``; returns (object, distance) or None when ``s`` is unreachable."""
        dist, origin, pot, heap = self.dist, self.origin, self.pot, self.heap
        adj0, lout, level, labeled = self.adj0, self.lout, self.level, self.labeled
        done: set[int] = set()
        s = self.s
        while heap:
            key, o, u = heapq.heappop(heap)
            if u in done or o != origin[u] or key != dist[u] + pot[u]:
                continue
            done.add(u)
            self.settled += 1
            if u == s:
                return o, dist[u]
            du = dist[u]
            lvl = level(u)
            for v, w in adj0[u] if lvl == 0 else lout[lvl][u]:
                nd = du + w
                if nd < dist[v] or (nd == dist[v] and o < origin[v]):
                    dist[v] = nd
                    origin[v] = o
                    labeled.add(v)
                    heapq.heappush(heap, (nd + pot[v], o, v))
        return None


def knn_query(
    index,
    s: int,
    objects: ObjectSet | Iterable[int],
    k: int,
    table: LandmarkTable | None = None,
    reload: bool = True,
    prune: bool = True,
) -> KnnResult:
    """The k objects nearest to ``s`` (distances measured from ``s``), ascending.

    If ``k`` exceeds the number of objects every reachable object is returned.
    """
    table = index.table if table is None else table
    cz = pick(index, REVERSE)
    table.check(pick(index, FORWARD).graph)
    if not isinstance(objects, ObjectSet):
        objects = ObjectSet.from_vertices(cz.hierarchy, objects)
    if k < 1:
        raise ValueError("k must be at least 1")
    k = min(k, len(objects))
    if k == 0:
        return KnnResult([], 0, 0)
    small = pruning_phase(table, s, objects, k) if prune else objects
    alive = small.alive_vertices.tolist()
    marks = marks_from_level1(cz.hierarchy, set(small.cells[small.alive].tolist()) | {int(cz.hierarchy.level1[s])})
    phase = _MainPhase(cz, s, alive, marks, source_potential(table, s))
    items: list[tuple[int, int]] = []
    remaining = set(alive)
    for i in range(k):
        if i and not reload:
            phase.clear()
            phase.seed(sorted(remaining))
        found = phase.run()
        if found is None:
            break
        items.append(found)
        remaining.discard(found[0])
        if reload:
            phase.reload(found[0])
    return KnnResult(items, len(objects), len(alive), phase.settled, small.alive.copy())


def knn_oracle(graph: Graph, s: int, objects: Iterable[int], k: int) -> list[tuple[int, int]]:
    """Forward Dijkstra from ``s`` until k objects are settled.

    Vertices pop in (distance, id) order, so the result is the k smallest
    (distance, object) pairs over reachable objects.
    """
    wanted = set(int(x) for x in objects)
    adj = graph.adjacency
    dist = {s: 0}
    done: set[int] = set()
    heap = [(0, s)]
    out: list[tuple[int, int]] = []
    while heap and len(out) < k:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u in wanted:
            out.append((u, d))
        for v, w in adj[u]:
            nd = d + w
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return out
