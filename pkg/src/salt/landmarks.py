"""Landmark selection, the from/to distance records, and triangle-inequality bounds.

Records are one int32 array of length ``2 * S * n``. For vertex i and landmark j,
slot ``2*S*i + j`` holds ``-dist(L_j, i)`` and slot ``2*S*i + S + j`` holds
``dist(i, L_j)``. Unreachable distances are stored as ``SENTINEL`` (negated in
from-slots); any bound term touching a sentinel is dropped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Callable, Sequence

import numpy as np

from .dijkstra import dijkstra
from .errors import SnapshotError, StaleIndexError
from .graph import INF, Graph
from .overlay import FORWARD, REVERSE
from .partition import PartitionHierarchy

LANDMARK_MAGIC = b"SALTLM01"
SENTINEL = 2**30
DEFAULT_LANDMARKS = 24


@dataclass(frozen=True, eq=False)
class LandmarkTable:
    landmarks: np.ndarray
    records: np.ndarray
    metric_key: str | None = None

    @property
    def landmark_count(self) -> int:
        return len(self.landmarks)

    @property
    def vertex_count(self) -> int:
        return len(self.records) // (2 * self.landmark_count)

    @cached_property
    def view(self) -> np.ndarray:
        """``view[i, 0, j]`` is the from-slot, ``view[i, 1, j]`` the to-slot."""
        return self.records.reshape(self.vertex_count, 2, self.landmark_count)

    @cached_property
    def _wide(self) -> np.ndarray:
        return self.view.astype(np.int64)

    def from_slot(self, i: int, j: int) -> int:
        return int(self.records[2 * self.landmark_count * i + j])

    def to_slot(self, i: int, j: int) -> int:
        return int(self.records[2 * self.landmark_count * i + self.landmark_count + j])

    def to_span(self, i: int) -> np.ndarray:
        S = self.landmark_count
        return self.records[2 * S * i + S: 2 * S * i + 2 * S]

    def from_span(self, i: int) -> np.ndarray:
        S = self.landmark_count
        return self.records[2 * S * i: 2 * S * i + S]

    def check(self, graph: Graph) -> None:
        if self.metric_key is not None and self.metric_key != graph.metric_key:
            raise StaleIndexError("landmark table was built for a different metric")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkTable):
            return NotImplemented
        return np.array_equal(self.landmarks, other.landmarks) and np.array_equal(self.records, other.records)

    __hash__ = None  # type: ignore[assignment]


def _corner_candidates(vertices: np.ndarray, coords: np.ndarray) -> list[int]:
    xy = coords[vertices]
    out = []
    for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        score = sx * xy[:, 0] + sy * xy[:, 1]
        # argmax returns the first maximum, i.e. the smallest id, since vertices are ascending
        out.append(int(vertices[int(np.argmax(score))]))
    return out


def select_partition_corners(
    hierarchy: PartitionHierarchy,
    coordinates: np.ndarray | None,
    landmark_count: int,
    graph: Graph | None = None,
    seed: int = 0,
) -> list[int]:
    """Corner-most vertices of the cells of one level, picked round-robin over cells.

    The level used is the one with the fewest cells that still offers four
    corners per requested landmark. Without coordinates, ``graph`` is required
    and farthest-point selection is used instead.
    """
    if landmark_count < 1:
        raise ValueError("landmark_count must be at least 1")
    if coordinates is None:
        if graph is None:
            raise ValueError("farthest-point fallback needs the graph")
        return farthest_landmarks(graph, landmark_count, seed)
    coords = np.asarray(coordinates, dtype=np.int64)
    level = 1
    for lvl in range(hierarchy.levels, 0, -1):
        if hierarchy.level_spec[lvl - 1] * 4 >= landmark_count:
            level = lvl
            break
    per_cell = [
        _corner_candidates(members, coords)
        for c in range(hierarchy.level_spec[level - 1])
        if len(members := hierarchy.members(level, c))
    ]
    chosen: list[int] = []
    taken: set[int] = set()
    for rnd in range(4):
        for cands in per_cell:
            v = cands[rnd]
            if v not in taken:
                taken.add(v)
                chosen.append(v)
                if len(chosen) == landmark_count:
                    return chosen
    if graph is not None and len(chosen) < min(landmark_count, hierarchy.vertex_count):
        chosen = farthest_landmarks(graph, landmark_count, seed, initial=chosen)
    return chosen


def farthest_landmarks(graph: Graph, landmark_count: int, seed: int = 0, initial: Sequence[int] = ()) -> list[int]:
    """Greedy farthest-point selection; starts from the vertex farthest from a random seed vertex."""
    n = graph.vertex_count
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = list(initial)
    nearest = np.full(n, INF, dtype=np.int64)

    def absorb(v: int) -> None:
        d = np.array(dijkstra(graph, v)[0], dtype=np.int64)
        np.minimum(nearest, d, out=nearest)

    for v in chosen:
        absorb(v)
    if not chosen:
        start = int(rng.integers(n))
        d = np.array(dijkstra(graph, start)[0], dtype=np.int64)
        d[d == INF] = -1
        chosen.append(int(np.argmax(d)))
        absorb(chosen[-1])
    while len(chosen) < min(landmark_count, n):
        score = nearest.copy()
        score[chosen] = -1
        # unreachable vertices count as farthest so every component gets covered
        chosen.append(int(np.argmax(score)))
        absorb(chosen[-1])
    return chosen


def grasp_engine(pair) -> Callable[[str, int], np.ndarray]:
    from .sssp import one_to_all

    return lambda direction, s: one_to_all(pair, s, direction)


def dijkstra_engine(graph: Graph, reverse: Graph) -> Callable[[str, int], np.ndarray]:
    def run(direction: str, s: int) -> np.ndarray:
        return np.array(dijkstra(graph if direction == FORWARD else reverse, s)[0], dtype=np.int64)

    return run


def build_landmark_table(
    graph: Graph,
    landmarks: Sequence[int],
    engine: Callable[[str, int], np.ndarray],
) -> LandmarkTable:
    """From-rows by forward one-to-all from each landmark, to-rows by reverse one-to-all."""
    n, S = graph.vertex_count, len(landmarks)
    view = np.empty((n, 2, S), dtype=np.int64)
    for j, lm in enumerate(landmarks):
        for side, direction in ((0, FORWARD), (1, REVERSE)):
            d = np.asarray(engine(direction, int(lm)), dtype=np.int64)
            finite = d != INF
            if finite.any() and d[finite].max() >= SENTINEL:
                raise OverflowError("distance does not fit below the landmark sentinel (2^30)")
            d = np.where(finite, d, SENTINEL)
            view[:, side, j] = -d if side == 0 else d
    records = view.reshape(-1).astype(np.int32)
    return LandmarkTable(np.asarray(landmarks, dtype=np.int64), records, graph.metric_key)


def lower_bound(table: LandmarkTable, u: int, v: int) -> int:
    w = table._wide
    to_u, to_v, fr_u, fr_v = w[u, 1], w[v, 1], w[u, 0], w[v, 0]
    t1 = np.where((to_u < SENTINEL) & (to_v < SENTINEL), to_u - to_v, 0)
    t2 = np.where((fr_u > -SENTINEL) & (fr_v > -SENTINEL), fr_u - fr_v, 0)
    return max(0, int(t1.max(initial=0)), int(t2.max(initial=0)))


def upper_bound(table: LandmarkTable, u: int, v: int) -> int:
    to_u = table.to_span(u).astype(np.int64)
    fr_v = table.from_span(v).astype(np.int64)
    ok = (to_u < SENTINEL) & (fr_v > -SENTINEL)
    if not ok.any():
        return INF
    return int((to_u - fr_v)[ok].min())


def lower_bounds_to(table: LandmarkTable, t: int) -> np.ndarray:
    """``lower_bound(v, t)`` for every vertex v in one element-wise pass."""
    w = table._wide
    to, fr = w[:, 1, :], w[:, 0, :]
    to_t, fr_t = w[t, 1], w[t, 0]
    t1 = np.where((to < SENTINEL) & (to_t < SENTINEL), to - to_t, 0)
    t2 = np.where((fr > -SENTINEL) & (fr_t > -SENTINEL), fr - fr_t, 0)
    return np.maximum(np.maximum(t1.max(axis=1, initial=0), t2.max(axis=1, initial=0)), 0)


def lower_bounds_from(table: LandmarkTable, s: int, vertices: np.ndarray | None = None) -> np.ndarray:
    """``lower_bound(s, v)`` for every v (or for ``vertices``)."""
    w = table._wide if vertices is None else table._wide[np.asarray(vertices, dtype=np.int64)]
    to, fr = w[:, 1, :], w[:, 0, :]
    to_s, fr_s = table._wide[s, 1], table._wide[s, 0]
    t1 = np.where((to < SENTINEL) & (to_s < SENTINEL), to_s - to, 0)
    t2 = np.where((fr > -SENTINEL) & (fr_s > -SENTINEL), fr_s - fr, 0)
    return np.maximum(np.maximum(t1.max(axis=1, initial=0), t2.max(axis=1, initial=0)), 0)


def upper_bounds_from(table: LandmarkTable, s: int, vertices: np.ndarray) -> np.ndarray:
    """``upper_bound(s, o)`` for each o: min over landmarks of to-slot(s) minus from-slot(o)."""
    w = table._wide
    to_s = w[s, 1]
    fr = w[np.asarray(vertices, dtype=np.int64), 0, :]
    ok = (to_s < SENTINEL) & (fr > -SENTINEL)
    vals = np.where(ok, to_s - fr, INF)
    return vals.min(axis=1, initial=INF)


def potential(
    table: LandmarkTable,
    v: int,
    target: int,
    source: int | None = None,
    direction: str = FORWARD,
) -> float:
    """Unidirectional potential ``lower_bound(v, target)``; with ``source`` the average potential.

    The bidirectional forward potential is ``(pi_f - pi_r) / 2`` with
    ``pi_r(v) = lower_bound(source, v)``; the backward one is its negation.
    """
    pi_f = lower_bound(table, v, target)
    if source is None:
        return float(pi_f)
    p_f = (pi_f - lower_bound(table, source, v)) / 2
    return p_f if direction == FORWARD else -p_f


def save_landmarks(table: LandmarkTable, stream: IO[bytes]) -> None:
    stream.write(LANDMARK_MAGIC)
    stream.write(struct.pack("<I", table.landmark_count))
    stream.write(np.ascontiguousarray(table.landmarks, dtype="<u4").tobytes())
    stream.write(np.ascontiguousarray(table.records, dtype="<i4").tobytes())


def load_landmarks(stream: IO[bytes], metric_key: str | None = None) -> LandmarkTable:
    if stream.read(8) != LANDMARK_MAGIC:
        raise SnapshotError("not a SALTLM01 snapshot")
    (S,) = struct.unpack("<I", stream.read(4))
    landmarks = np.frombuffer(stream.read(4 * S), dtype="<u4").astype(np.int64)
    raw = stream.read()
    if S == 0 or len(raw) % (8 * S):
        raise SnapshotError("landmark record array has an invalid length")
    return LandmarkTable(landmarks, np.frombuffer(raw, dtype="<i4").astype(np.int32), metric_key)
