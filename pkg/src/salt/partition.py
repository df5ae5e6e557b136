"""Nested multilevel partitions and boundary classification.

Levels are numbered 1..L. ``cells[l - 1][v]`` is the level-l cell of ``v``; the
level-(l+1) cell of a level-l cell ``c`` is ``parents[l - 1][c]``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import CountError, FormatError, NeedsCoordinatesError, NestingError, SnapshotError
from .graph import Graph, NodePermutation, level_order_permutation

PARTITION_MAGIC = b"SALTPT01"

# |C^1| .. |C^6| used for the continental networks
CONTINENTAL_LEVEL_SPEC = (1048576, 65536, 8192, 1024, 128, 16)


def default_level_spec(vertex_count: int, levels: int = 4, top: int = 16, fanout: int | None = None) -> tuple[int, ...]:
    """Desk-scale profile: ``levels`` levels, ``top`` cells at level L, growing by ``fanout``.

    Small graphs shrink the top level (and then the level count) so that a
    level-1 cell still holds about four vertices or more. Without an explicit
    fanout, the smallest power of two keeping level-1 cells at <= 512 vertices
    is used.
    """
    if fanout is None:
        fanout = 2
        while vertex_count > 512 * top * fanout ** (levels - 1):
            fanout *= 2
    cap = max(1, vertex_count // 4)
    while levels > 1 and fanout ** (levels - 1) > cap:
        levels -= 1
    while top > 1 and top * fanout ** (levels - 1) > cap:
        top //= 2
    return tuple(top * fanout ** (levels - 1 - i) for i in range(levels))


@dataclass(frozen=True, eq=False)
class PartitionHierarchy:
    level_spec: tuple[int, ...]
    level1: np.ndarray
    parents: tuple[np.ndarray, ...]
    boundary_level: np.ndarray = field(repr=False)

    @property
    def levels(self) -> int:
        return len(self.level_spec)

    @property
    def vertex_count(self) -> int:
        return len(self.level1)

    @cached_property
    def cells(self) -> np.ndarray:
        out = np.empty((self.levels, self.vertex_count), dtype=np.int64)
        out[0] = self.level1
        for lvl in range(1, self.levels):
            out[lvl] = self.parents[lvl - 1][out[lvl - 1]]
        return out

    @cached_property
    def cell_lists(self) -> list[list[int]]:
        """``cell_lists[l][v]`` is the level-l cell of v as plain ints (index 0 unused)."""
        return [[]] + [row.tolist() for row in self.cells]

    def cell_of(self, v: int, level: int) -> int:
        return int(self.cells[level - 1][v])

    @cached_property
    def _members(self) -> list[list[np.ndarray]]:
        out = []
        for lvl in range(self.levels):
            row = self.cells[lvl]
            order = np.argsort(row, kind="stable")
            bounds = np.searchsorted(row[order], np.arange(self.level_spec[lvl] + 1))
            out.append([order[bounds[c]:bounds[c + 1]] for c in range(self.level_spec[lvl])])
        return out

    def members(self, level: int, cell: int) -> np.ndarray:
        """Vertices of a cell in ascending id order."""
        return self._members[level - 1][cell]

    def ancestor_cells(self, vertices: Iterable[int]) -> list[set[int]]:
        """Per level (index 0 unused) the set of cells containing at least one of ``vertices``."""
        vs = np.fromiter(vertices, dtype=np.int64)
        return [set()] + [set(np.unique(self.cells[lvl][vs]).tolist()) for lvl in range(self.levels)]

    def permuted(self, permutation: NodePermutation) -> "PartitionHierarchy":
        return PartitionHierarchy(
            self.level_spec,
            self.level1[permutation.new_to_old],
            self.parents,
            self.boundary_level[permutation.new_to_old],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartitionHierarchy):
            return NotImplemented
        return (
            self.level_spec == other.level_spec
            and np.array_equal(self.level1, other.level1)
            and all(np.array_equal(a, b) for a, b in zip(self.parents, other.parents))
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class BoundaryClassification:
    """Index 0 of each list is unused so that ``vertices[l]`` is level l."""

    vertices: list[np.ndarray]
    arcs: list[np.ndarray]  # (k, 2) arrays of (tail, head)


def arc_levels(graph: Graph, hierarchy: PartitionHierarchy) -> np.ndarray:
    """Per arc, the highest level whose cells differ at its endpoints (0 = inner arc)."""
    tails, heads = graph.tails, graph.heads
    lam = np.zeros(graph.arc_count, dtype=np.int64)
    for lvl in range(hierarchy.levels):
        lam += hierarchy.cells[lvl][tails] != hierarchy.cells[lvl][heads]
    return lam


def _boundary_levels(graph: Graph, cells_by_level: np.ndarray) -> np.ndarray:
    lam = np.zeros(graph.arc_count, dtype=np.int64)
    for row in cells_by_level:
        lam += row[graph.tails] != row[graph.heads]
    out = np.zeros(graph.vertex_count, dtype=np.int64)
    np.maximum.at(out, graph.tails, lam)
    np.maximum.at(out, graph.heads, lam)
    return out


def make_hierarchy(
    graph: Graph,
    level1: Sequence[int] | np.ndarray,
    level_spec: Sequence[int],
    parents: Sequence[Sequence[int] | np.ndarray] | None = None,
) -> PartitionHierarchy:
    level_spec = tuple(int(c) for c in level_spec)
    if not level_spec or min(level_spec) < 1:
        raise ValueError("level_spec needs at least one level with a positive cell count")
    level1 = np.asarray(level1, dtype=np.int64)
    if len(level1) != graph.vertex_count:
        raise CountError(f"partition covers {len(level1)} vertices, graph has {graph.vertex_count}")
    if len(level1) and (level1.min() < 0 or level1.max() >= level_spec[0]):
        raise NestingError(f"level-1 cell id outside [0, {level_spec[0]})")
    if parents is None:
        parents = []
        for lvl in range(len(level_spec) - 1):
            group = -(-level_spec[lvl] // level_spec[lvl + 1])
            parents.append(np.arange(level_spec[lvl], dtype=np.int64) // group)
    parents = tuple(np.asarray(p, dtype=np.int64) for p in parents)
    if len(parents) != len(level_spec) - 1:
        raise NestingError("need one parent map per level below the top")
    for lvl, p in enumerate(parents):
        if len(p) != level_spec[lvl] or (len(p) and (p.min() < 0 or p.max() >= level_spec[lvl + 1])):
            raise NestingError(f"parent map of level {lvl + 1} does not fit level_spec")
    cells = np.empty((len(level_spec), len(level1)), dtype=np.int64)
    cells[0] = level1
    for lvl in range(1, len(level_spec)):
        cells[lvl] = parents[lvl - 1][cells[lvl - 1]]
    return PartitionHierarchy(level_spec, level1, parents, _boundary_levels(graph, cells))


def classify_boundaries(graph: Graph, hierarchy: PartitionHierarchy) -> BoundaryClassification:
    lam = arc_levels(graph, hierarchy)
    pairs = np.stack([graph.tails, graph.heads], axis=1)
    vertices: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
    arcs: list[np.ndarray] = [np.empty((0, 2), dtype=np.int64)]
    for lvl in range(1, hierarchy.levels + 1):
        vertices.append(np.flatnonzero(hierarchy.boundary_level >= lvl))
        arcs.append(pairs[lam >= lvl])
    return BoundaryClassification(vertices, arcs)


def load_partition_file(
    stream: IO[str],
    graph: Graph,
    level_spec: Sequence[int] | None = None,
    source: str | None = None,
) -> PartitionHierarchy:
    """Read ``s levels L c1 .. cL`` (optional) then one line per vertex.

    A vertex line holds either its level-1 cell, or its cells on every level
    1..L; in the latter case the implied parent maps are checked for nesting.
    """
    header: tuple[int, ...] | None = None
    rows: list[list[int]] = []
    for lineno, raw in enumerate(stream, start=1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "s":
            if header is not None or rows or len(parts) < 3 or parts[1] != "levels":
                raise FormatError("expected 's levels <L> <|C^1|> .. <|C^L|>' before vertex lines", lineno, source)
            nums = [int(x) for x in parts[2:]]
            if nums[0] != len(nums) - 1:
                raise FormatError(f"header announces {nums[0]} levels but lists {len(nums) - 1} counts", lineno, source)
            header = tuple(nums[1:])
            continue
        try:
            rows.append([int(x) for x in parts])
        except ValueError:
            raise FormatError("non-integer cell id", lineno, source) from None
    spec = tuple(level_spec) if level_spec is not None else header
    if spec is None:
        spec = (max((r[0] for r in rows), default=0) + 1,)
    if len(rows) != graph.vertex_count:
        raise CountError(f"partition file lists {len(rows)} vertices, graph has {graph.vertex_count}", None, source)
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise FormatError("vertex lines mix single-level and all-level forms", None, source)
    width = widths.pop() if widths else 1
    level1 = np.array([r[0] for r in rows], dtype=np.int64)
    if width == 1:
        return make_hierarchy(graph, level1, spec)
    if width != len(spec):
        raise FormatError(f"vertex lines carry {width} levels, level_spec has {len(spec)}", None, source)
    table = np.array(rows, dtype=np.int64)
    parents = []
    for lvl in range(len(spec) - 1):
        p = -np.ones(spec[lvl], dtype=np.int64)
        for c, up in zip(table[:, lvl].tolist(), table[:, lvl + 1].tolist()):
            if not 0 <= c < spec[lvl] or not 0 <= up < spec[lvl + 1]:
                raise NestingError(f"cell id out of range at level {lvl + 1}")
            if p[c] not in (-1, up):
                raise NestingError(f"level-{lvl + 1} cell {c} lies in two level-{lvl + 2} cells ({p[c]} and {up})")
            p[c] = up
        p[p < 0] = 0  # empty cells: any parent keeps the map total
        parents.append(p)
    return make_hierarchy(graph, level1, spec, parents)


def _split(vertices: np.ndarray, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xy = coords[vertices]
    spread = xy.max(axis=0) - xy.min(axis=0)
    axis = 0 if spread[0] >= spread[1] else 1
    vals = xy[:, axis]
    median = np.sort(vals)[(len(vals) - 1) // 2]
    lower = vals <= median
    if lower.all():
        order = np.lexsort((vertices, vals))
        lower = np.zeros(len(vertices), dtype=bool)
        lower[order[: (len(vertices) + 1) // 2]] = True
    return vertices[lower], vertices[~lower]


def bisect_partition(
    graph: Graph,
    level_spec: Sequence[int],
    coordinates: np.ndarray | None = None,
    seed: int = 0,
) -> PartitionHierarchy:
    """Recursive coordinate bisection: split on the wider axis at the median.

    Vertices tied with the median go to the lower side. The result depends
    only on coordinates and ids, never on weights; ``seed`` is accepted for
    interface symmetry with randomized partitioners and does not change the
    output.
    """
    coords = graph.coordinates if coordinates is None else np.asarray(coordinates, dtype=np.int64)
    if coords is None:
        raise NeedsCoordinatesError("bisect_partition needs vertex coordinates")
    level_spec = tuple(int(c) for c in level_spec)
    for lvl, c in enumerate(level_spec):
        if c < 1 or c & (c - 1):
            raise ValueError(f"cell count {c} at level {lvl + 1} is not a power of two")
        if lvl and c > level_spec[lvl - 1]:
            raise ValueError("cell counts must not grow with the level")

    level1 = np.zeros(graph.vertex_count, dtype=np.int64)
    stack = [(np.arange(graph.vertex_count, dtype=np.int64), 0, level_spec[0])]
    while stack:
        vs, first, parts = stack.pop()
        if parts == 1 or len(vs) == 0:
            level1[vs] = first
            continue
        if len(vs) == 1:
            level1[vs] = first
            continue
        lo, hi = _split(vs, coords)
        stack.append((lo, first, parts // 2))
        stack.append((hi, first + parts // 2, parts // 2))
    return make_hierarchy(graph, level1, level_spec)


def reorder_by_level(graph: Graph, hierarchy: PartitionHierarchy) -> NodePermutation:
    return level_order_permutation(hierarchy.boundary_level, hierarchy.level1)


def save_partition(hierarchy: PartitionHierarchy, stream: IO[bytes], permutation: NodePermutation | None = None) -> None:
    """SALTPT01: L, counts, n, level-1 cells, parent maps, then an optional new->old map."""
    stream.write(PARTITION_MAGIC)
    stream.write(struct.pack("<I", hierarchy.levels))
    stream.write(np.asarray(hierarchy.level_spec, dtype="<u4").tobytes())
    stream.write(struct.pack("<I", hierarchy.vertex_count))
    stream.write(np.ascontiguousarray(hierarchy.level1, dtype="<u4").tobytes())
    for p in hierarchy.parents:
        stream.write(np.ascontiguousarray(p, dtype="<u4").tobytes())
    stream.write(struct.pack("<I", 0 if permutation is None else 1))
    if permutation is not None:
        stream.write(np.ascontiguousarray(permutation.new_to_old, dtype="<u4").tobytes())


def load_partition(stream: IO[bytes], graph: Graph) -> tuple[PartitionHierarchy, NodePermutation | None]:
    if stream.read(8) != PARTITION_MAGIC:
        raise SnapshotError("not a SALTPT01 snapshot")
    (levels,) = struct.unpack("<I", stream.read(4))
    spec = np.frombuffer(stream.read(4 * levels), dtype="<u4").astype(np.int64).tolist()
    (n,) = struct.unpack("<I", stream.read(4))
    level1 = np.frombuffer(stream.read(4 * n), dtype="<u4").astype(np.int64)
    parents = [np.frombuffer(stream.read(4 * spec[lvl]), dtype="<u4").astype(np.int64) for lvl in range(levels - 1)]
    (has_perm,) = struct.unpack("<I", stream.read(4))
    perm = None
    if has_perm:
        perm = NodePermutation.from_new_to_old(np.frombuffer(stream.read(4 * n), dtype="<u4").astype(np.int64))
    return make_hierarchy(graph, level1, spec, parents), perm
