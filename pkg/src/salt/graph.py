"""Compact CSR road graphs, DIMACS I/O, reversal and vertex relabeling."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CountError,
    DuplicateError,
    FormatError,
    MetricError,
    PermutationError,
    RangeError,
    SnapshotError,
    WeightError,
)

INF = 2**32 - 1
MAX_WEIGHT = 2**31 - 1

TRAVEL_TIME = "travel_time"
TRAVEL_DISTANCE = "travel_distance"
METRIC_TAGS = (TRAVEL_TIME, TRAVEL_DISTANCE)

GRAPH_MAGIC = b"SALTGR01"


@dataclass(frozen=True)
class Metric:
    tag: str
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.tag not in METRIC_TAGS:
            raise MetricError(f"unknown metric tag {self.tag!r}")
        w = np.asarray(self.weights, dtype=np.int64)
        if w.ndim != 1:
            raise MetricError("metric weights must be one-dimensional")
        if len(w) and (w.min() <= 0 or w.max() > MAX_WEIGHT):
            raise MetricError("metric weights must lie in [1, 2^31)")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed graph in CSR form with one active metric.

    Arcs are stored sorted by (tail, head) with no self-loops and no parallel
    arcs. ``origin_arc`` is only set on reverse graphs: it maps each arc to the
    index of the forward arc it was produced from, which is how a new forward
    metric is carried over to the reverse direction.
    """

    offsets: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    coordinates: np.ndarray | None = None
    metric_tag: str = TRAVEL_TIME
    origin_arc: np.ndarray | None = field(default=None, repr=False)

    @property
    def vertex_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def arc_count(self) -> int:
        return len(self.heads)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.repeat(np.arange(self.vertex_count, dtype=np.int64), np.diff(self.offsets))

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-vertex ``[(head, weight), ...]`` lists for the search hot loops."""
        heads = self.heads.tolist()
        weights = self.weights.tolist()
        offs = self.offsets.tolist()
        return [list(zip(heads[offs[v]:offs[v + 1]], weights[offs[v]:offs[v + 1]])) for v in range(self.vertex_count)]

    @cached_property
    def metric_key(self) -> str:
        """Digest of topology plus weights; indexes record it to detect staleness."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.ascontiguousarray(self.offsets, dtype="<u8").tobytes())
        h.update(np.ascontiguousarray(self.heads, dtype="<u4").tobytes())
        h.update(np.ascontiguousarray(self.weights, dtype="<u4").tobytes())
        return h.hexdigest()

    @property
    def metric(self) -> Metric:
        return Metric(self.metric_tag, self.weights)

    def arcs(self) -> Iterator[tuple[int, int, int]]:
        for u, v, w in zip(self.tails.tolist(), self.heads.tolist(), self.weights.tolist()):
            yield u, v, w

    def out_arcs(self, v: int) -> list[tuple[int, int]]:
        return self.adjacency[v]

    def with_metric(self, metric: Metric | Sequence[int] | np.ndarray, tag: str | None = None) -> "Graph":
        if isinstance(metric, Metric):
            weights, tag = metric.weights, metric.tag
        else:
            weights = Metric(tag or self.metric_tag, np.asarray(metric)).weights
        if len(weights) != self.arc_count:
            raise MetricError(f"metric has {len(weights)} weights, graph has {self.arc_count} arcs")
        return Graph(self.offsets, self.heads, weights, self.coordinates, tag or self.metric_tag, self.origin_arc)

    def same_topology(self, other: "Graph") -> bool:
        return np.array_equal(self.offsets, other.offsets) and np.array_equal(self.heads, other.heads)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.same_topology(other)
            and np.array_equal(self.weights, other.weights)
            and self.metric_tag == other.metric_tag
        )

    __hash__ = None  # type: ignore[assignment]


def from_arcs(
    vertex_count: int,
    arcs: Iterable[tuple[int, int, int]],
    coordinates: np.ndarray | Sequence[tuple[int, int]] | None = None,
    metric_tag: str = TRAVEL_TIME,
) -> Graph:
    """Build a canonical graph; self-loops are dropped and parallel arcs keep the minimum weight."""
    arr = np.array(list(arcs), dtype=np.int64).reshape(-1, 3)
    if len(arr):
        if arr[:, :2].min() < 0 or arr[:, :2].max() >= vertex_count:
            raise RangeError("arc endpoint outside [0, n)")
        if arr[:, 2].min() <= 0 or arr[:, 2].max() > MAX_WEIGHT:
            raise WeightError("arc weight outside [1, 2^31)")
    arr = arr[arr[:, 0] != arr[:, 1]]
    # sort by (tail, head, weight) so the first of each (tail, head) run is the minimum
    order = np.lexsort((arr[:, 2], arr[:, 1], arr[:, 0]))
    arr = arr[order]
    if len(arr):
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = (arr[1:, 0] != arr[:-1, 0]) | (arr[1:, 1] != arr[:-1, 1])
        arr = arr[keep]
    counts = np.bincount(arr[:, 0], minlength=vertex_count) if len(arr) else np.zeros(vertex_count, dtype=np.int64)
    offsets = np.zeros(vertex_count + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    coords = None if coordinates is None else np.asarray(coordinates, dtype=np.int64).reshape(vertex_count, 2)
    return Graph(offsets, arr[:, 1].copy(), arr[:, 2].copy(), coords, metric_tag)


def _tokens(stream: IO[str]) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(stream, start=1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        yield lineno, parts


def parse_dimacs_gr(stream: IO[str], source: str | None = None, metric_tag: str = TRAVEL_TIME) -> Graph:
    n = m = None
    arcs: list[tuple[int, int, int]] = []
    last_line = 0
    for lineno, parts in _tokens(stream):
        last_line = lineno
        if parts[0] == "p":
            if n is not None or len(parts) != 4 or parts[1] != "sp":
                raise FormatError("expected header 'p sp <n> <m>'", lineno, source)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError("non-integer header field", lineno, source) from None
            if n < 0 or m < 0:
                raise FormatError("negative header count", lineno, source)
        elif parts[0] == "a":
            if n is None:
                raise FormatError("arc line before header", lineno, source)
            if len(parts) != 4:
                raise FormatError("expected 'a <u> <v> <w>'", lineno, source)
            try:
                u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError("non-integer arc field", lineno, source) from None
            if not (1 <= u <= n and 1 <= v <= n):
                raise RangeError(f"arc endpoint out of [1, {n}]", lineno, source)
            if w <= 0 or w > MAX_WEIGHT:
                raise WeightError(f"weight {w} outside [1, 2^31)", lineno, source)
            arcs.append((u - 1, v - 1, w))
            if len(arcs) > m:
                raise CountError(f"more than {m} arc lines", lineno, source)
        else:
            raise FormatError(f"unexpected line type {parts[0]!r}", lineno, source)
    if n is None:
        raise FormatError("missing 'p sp' header", last_line or None, source)
    if len(arcs) != m:
        raise CountError(f"header announces {m} arcs, found {len(arcs)}", last_line, source)
    return from_arcs(n, arcs, metric_tag=metric_tag)


def parse_dimacs_co(stream: IO[str], vertex_count: int, source: str | None = None) -> np.ndarray:
    n = None
    coords: np.ndarray | None = None
    seen: np.ndarray | None = None
    last_line = 0
    for lineno, parts in _tokens(stream):
        last_line = lineno
        if parts[0] == "p":
            if n is not None or len(parts) != 5 or parts[1:4] != ["aux", "sp", "co"]:
                raise FormatError("expected header 'p aux sp co <n>'", lineno, source)
            try:
                n = int(parts[4])
            except ValueError:
                raise FormatError("non-integer header field", lineno, source) from None
            if n != vertex_count:
                raise CountError(f"coordinate file has {n} vertices, graph has {vertex_count}", lineno, source)
            coords = np.zeros((n, 2), dtype=np.int64)
            seen = np.zeros(n, dtype=bool)
        elif parts[0] == "v":
            if coords is None or seen is None:
                raise FormatError("vertex line before header", lineno, source)
            if len(parts) != 4:
                raise FormatError("expected 'v <id> <x> <y>'", lineno, source)
            try:
                i, x, y = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise FormatError("non-integer vertex field", lineno, source) from None
            if not 1 <= i <= n:
                raise RangeError(f"vertex id out of [1, {n}]", lineno, source)
            if seen[i - 1]:
                raise DuplicateError(f"duplicate vertex {i}", lineno, source)
            seen[i - 1] = True
            coords[i - 1] = (x, y)
        else:
            raise FormatError(f"unexpected line type {parts[0]!r}", lineno, source)
    if coords is None or seen is None:
        raise FormatError("missing 'p aux sp co' header", last_line or None, source)
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0]) + 1
        raise CountError(f"{int((~seen).sum())} vertices lack coordinates (first: {missing})", last_line, source)
    return coords


def write_dimacs_gr(graph: Graph, stream: IO[str]) -> None:
    stream.write(f"p sp {graph.vertex_count} {graph.arc_count}\n")
    for u, v, w in graph.arcs():
        stream.write(f"a {u + 1} {v + 1} {w}\n")


def write_dimacs_co(coordinates: np.ndarray, stream: IO[str]) -> None:
    stream.write(f"p aux sp co {len(coordinates)}\n")
    for i, (x, y) in enumerate(np.asarray(coordinates).tolist(), start=1):
        stream.write(f"v {i} {x} {y}\n")


def build_reverse(graph: Graph) -> Graph:
    """Reverse every arc. Applying it twice gives back the original arc multiset."""
    tails = graph.tails
    order = np.lexsort((tails, graph.heads))
    new_tails = graph.heads[order]
    counts = np.bincount(new_tails, minlength=graph.vertex_count)
    offsets = np.zeros(graph.vertex_count + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return Graph(
        offsets,
        tails[order].copy(),
        graph.weights[order].copy(),
        graph.coordinates,
        graph.metric_tag,
        origin_arc=order.astype(np.int64),
    )


def reverse_with_metric(reverse: Graph, forward_weights: np.ndarray) -> Graph:
    """Re-weight a reverse graph from a forward-aligned weight array."""
    if reverse.origin_arc is None:
        raise MetricError("graph was not produced by build_reverse")
    forward_weights = np.asarray(forward_weights, dtype=np.int64)
    if len(forward_weights) != reverse.arc_count:
        raise MetricError(f"metric has {len(forward_weights)} weights, graph has {reverse.arc_count} arcs")
    return Graph(
        reverse.offsets,
        reverse.heads,
        forward_weights[reverse.origin_arc],
        reverse.coordinates,
        reverse.metric_tag,
        reverse.origin_arc,
    )


@dataclass(frozen=True, eq=False)
class NodePermutation:
    old_to_new: np.ndarray
    new_to_old: np.ndarray

    @classmethod
    def from_new_to_old(cls, new_to_old: Sequence[int] | np.ndarray) -> "NodePermutation":
        new_to_old = np.asarray(new_to_old, dtype=np.int64)
        n = len(new_to_old)
        if n and (new_to_old.min() < 0 or new_to_old.max() >= n or len(np.unique(new_to_old)) != n):
            raise PermutationError("map is not a bijection on [0, n)")
        old_to_new = np.empty(n, dtype=np.int64)
        old_to_new[new_to_old] = np.arange(n, dtype=np.int64)
        return cls(old_to_new, new_to_old)

    @classmethod
    def identity(cls, n: int) -> "NodePermutation":
        return cls.from_new_to_old(np.arange(n))

    def __len__(self) -> int:
        return len(self.new_to_old)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodePermutation):
            return NotImplemented
        return np.array_equal(self.new_to_old, other.new_to_old)

    __hash__ = None  # type: ignore[assignment]


def level_order_permutation(boundary_level: np.ndarray, level1_cell: np.ndarray) -> NodePermutation:
    """Higher boundary level first, then level-1 cell, then old id."""
    n = len(boundary_level)
    order = np.lexsort((np.arange(n), np.asarray(level1_cell), -np.asarray(boundary_level, dtype=np.int64)))
    return NodePermutation.from_new_to_old(order)


def apply_permutation(graph: Graph, permutation: NodePermutation | Sequence[int] | np.ndarray) -> Graph:
    """Relabel vertices; ``permutation`` given as a NodePermutation or an old->new array."""
    if not isinstance(permutation, NodePermutation):
        old_to_new = np.asarray(permutation, dtype=np.int64)
        n = len(old_to_new)
        if n != graph.vertex_count or (n and (old_to_new.min() < 0 or old_to_new.max() >= n or len(np.unique(old_to_new)) != n)):
            raise PermutationError("map is not a bijection on [0, n)")
        permutation = NodePermutation.from_new_to_old(np.argsort(old_to_new))
    if len(permutation) != graph.vertex_count:
        raise PermutationError(f"permutation has {len(permutation)} entries, graph has {graph.vertex_count} vertices")
    o2n = permutation.old_to_new
    arcs = np.stack([o2n[graph.tails], o2n[graph.heads], graph.weights], axis=1)
    coords = None if graph.coordinates is None else graph.coordinates[permutation.new_to_old]
    return from_arcs(graph.vertex_count, arcs, coords, graph.metric_tag)


def save_graph(graph: Graph, stream: IO[bytes]) -> None:
    stream.write(GRAPH_MAGIC)
    stream.write(struct.pack("<II", graph.vertex_count, graph.arc_count))
    stream.write(np.ascontiguousarray(graph.offsets, dtype="<u4").tobytes())
    stream.write(np.ascontiguousarray(graph.heads, dtype="<u4").tobytes())
    stream.write(np.ascontiguousarray(graph.weights, dtype="<u4").tobytes())


def load_graph(stream: IO[bytes], metric_tag: str = TRAVEL_TIME) -> Graph:
    if stream.read(8) != GRAPH_MAGIC:
        raise SnapshotError("not a SALTGR01 snapshot")
    n, m = struct.unpack("<II", stream.read(8))
    offsets = _read_u32(stream, n + 1)
    heads = _read_u32(stream, m)
    weights = _read_u32(stream, m)
    return Graph(offsets, heads, weights, None, metric_tag)


def _read_u32(stream: IO[bytes], count: int) -> np.ndarray:
    raw = stream.read(4 * count)
    if len(raw) != 4 * count:
        raise SnapshotError("truncated snapshot")
    return np.frombuffer(raw, dtype="<u4").astype(np.int64)
