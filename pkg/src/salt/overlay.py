"""Graph-separator customization: clique arcs (overlay H) and downward arcs.

Both kinds of arcs are computed bottom-up. A level-1 cell is searched over its
inner arcs; a level-l cell (l >= 2) is searched over the level-(l-1) clique
arcs of its subcells plus the original arcs crossing level-(l-1) cells inside
it. One Dijkstra runs from each level-l boundary vertex of the cell.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import IO

import numpy as np

from .errors import MetricError, SnapshotError
from .graph import Graph, Metric, build_reverse, reverse_with_metric
from .partition import PartitionHierarchy, arc_levels

OVERLAY_MAGIC = b"SALTOV01"

FORWARD = "forward"
REVERSE = "reverse"

ArcArrays = tuple[np.ndarray, np.ndarray, np.ndarray]


def _empty_arcs() -> ArcArrays:
    z = np.empty(0, dtype=np.int64)
    return z, z.copy(), z.copy()


def _to_arrays(arcs: list[tuple[int, int, int]]) -> ArcArrays:
    if not arcs:
        return _empty_arcs()
    a = np.array(arcs, dtype=np.int64)
    a = a[np.lexsort((a[:, 1], a[:, 0]))]
    return a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy()


def _arcs_equal(a: list[ArcArrays], b: list[ArcArrays]) -> bool:
    return len(a) == len(b) and all(
        all(np.array_equal(x, y) for x, y in zip(la, lb)) for la, lb in zip(a, b)
    )


@dataclass(frozen=True, eq=False)
class OverlayIndex:
    """Clique arcs per level; ``levels[l - 1]`` holds (tails, heads, weights) sorted by (tail, head)."""

    direction: str
    levels: list[ArcArrays]

    def arcs(self, level: int) -> list[tuple[int, int, int]]:
        t, h, w = self.levels[level - 1]
        return list(zip(t.tolist(), h.tolist(), w.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OverlayIndex):
            return NotImplemented
        return self.direction == other.direction and _arcs_equal(self.levels, other.levels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class DownwardGraph:
    """Downward arcs per level, same layout as :class:`OverlayIndex`."""

    direction: str
    levels: list[ArcArrays]

    def arcs(self, level: int) -> list[tuple[int, int, int]]:
        t, h, w = self.levels[level - 1]
        return list(zip(t.tolist(), h.tolist(), w.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DownwardGraph):
            return NotImplemented
        return self.direction == other.direction and _arcs_equal(self.levels, other.levels)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Customization:
    """One direction's customized index plus the lookup tables the queries scan."""

    direction: str
    graph: Graph
    hierarchy: PartitionHierarchy
    overlay: OverlayIndex
    downward: DownwardGraph
    arc_reduction: bool = True

    @property
    def metric_key(self) -> str:
        return self.graph.metric_key

    def __iter__(self):
        yield self.overlay
        yield self.downward

    @cached_property
    def arc_level(self) -> np.ndarray:
        return arc_levels(self.graph, self.hierarchy)

    @cached_property
    def level_out(self) -> list[list[list[tuple[int, int]]]]:
        """``level_out[l][v]``: clique arcs of level l from v plus original arcs leaving v's level-l cell."""
        n = self.graph.vertex_count
        L = self.hierarchy.levels
        out: list[list[list[tuple[int, int]]]] = [[]]
        lam = self.arc_level.tolist()
        tails = self.graph.tails.tolist()
        heads = self.graph.heads.tolist()
        weights = self.graph.weights.tolist()
        for lvl in range(1, L + 1):
            rows: list[list[tuple[int, int]]] = [[] for _ in range(n)]
            for u, v, w in self.overlay.arcs(lvl):
                rows[u].append((v, w))
            for u, v, w, a in zip(tails, heads, weights, lam):
                if a >= lvl:
                    rows[u].append((v, w))
            out.append(rows)
        return out

    @cached_property
    def down_cells(self) -> list[list[list[tuple[int, list[tuple[int, int]]]]]]:
        """``down_cells[l][c]``: [(boundary tail, [(head, w), ...]), ...] in storage order."""
        out: list[list[list[tuple[int, list[tuple[int, int]]]]]] = [[]]
        for lvl in range(1, self.hierarchy.levels + 1):
            cell_row = self.hierarchy.cell_lists[lvl]
            cells: list[list[tuple[int, list[tuple[int, int]]]]] = [[] for _ in range(self.hierarchy.level_spec[lvl - 1])]
            last = -1
            for b, x, w in self.downward.arcs(lvl):
                group = cells[cell_row[b]]
                if b != last:
                    group.append((b, []))
                    last = b
                group[-1][1].append((x, w))
            out.append(cells)
        return out


def arc_reduced_clique(
    adjacency: dict[int, list[tuple[int, int]]],
    roster: list[int],
    targets: list[int] | None = None,
    arc_reduction: bool = True,
) -> tuple[list[tuple[int, int, int]], list[tuple[int, int, int]]]:
    """Run one Dijkstra per roster vertex over ``adjacency`` (the cell's search graph).

    Returns ``(clique_arcs, downward_arcs)``. A clique arc (b, v) is emitted for
    every other roster vertex v reached, except, with ``arc_reduction``, when
    the tree path from b to v passes through a third roster vertex. Downward
    arcs go from b to every reached vertex of ``targets``. Ties are popped by
    smaller vertex id and a parent is only replaced on strict improvement.
    """
    roster_set = set(roster)
    cliques: list[tuple[int, int, int]] = []
    downs: list[tuple[int, int, int]] = []
    for b in roster:
        dist = {b: 0}
        through = {b: False}
        done = set()
        heap = [(0, b)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            via = through[u] or (u != b and u in roster_set)
            for v, w in adjacency.get(u, ()):
                nd = d + w
                if nd < dist.get(v, nd + 1):
                    dist[v] = nd
                    through[v] = via
                    heapq.heappush(heap, (nd, v))
        for v in roster:
            if v != b and v in dist and not (arc_reduction and through[v]):
                cliques.append((b, v, dist[v]))
        if targets is not None:
            for x in targets:
                if x in dist:
                    downs.append((b, x, dist[x]))
    return cliques, downs


def customize(
    graph: Graph,
    hierarchy: PartitionHierarchy,
    direction: str = FORWARD,
    arc_reduction: bool = True,
) -> Customization:
    if hierarchy.vertex_count != graph.vertex_count:
        raise MetricError("hierarchy and graph disagree on the vertex count")
    lam = arc_levels(graph, hierarchy).tolist()
    bl = hierarchy.boundary_level.tolist()
    # by_level[k][u]: arcs of u whose highest differing level is exactly k
    by_level: list[dict[int, list[tuple[int, int]]]] = [dict() for _ in range(hierarchy.levels + 1)]
    for u, v, w, k in zip(graph.tails.tolist(), graph.heads.tolist(), graph.weights.tolist(), lam):
        by_level[k].setdefault(u, []).append((v, w))

    clique_levels: list[ArcArrays] = []
    down_levels: list[ArcArrays] = []
    prev_clique: dict[int, list[tuple[int, int]]] = {}
    for lvl in range(1, hierarchy.levels + 1):
        inner = by_level[lvl - 1]
        level_cliques: list[tuple[int, int, int]] = []
        level_downs: list[tuple[int, int, int]] = []
        for c in range(hierarchy.level_spec[lvl - 1]):
            members = hierarchy.members(lvl, c).tolist()
            nodes = members if lvl == 1 else [v for v in members if bl[v] >= lvl - 1]
            roster = [v for v in nodes if bl[v] >= lvl]
            if not roster:
                continue
            adjacency = {}
            for u in nodes:
                arcs = list(inner.get(u, ()))
                if lvl > 1:
                    arcs.extend(prev_clique.get(u, ()))
                if arcs:
                    adjacency[u] = arcs
            cl, dn = arc_reduced_clique(adjacency, roster, nodes, arc_reduction)
            level_cliques.extend(cl)
            level_downs.extend(dn)
        cliques = _to_arrays(level_cliques)
        clique_levels.append(cliques)
        down_levels.append(_to_arrays(level_downs))
        prev_clique = {}
        for u, v, w in zip(*(a.tolist() for a in cliques)):
            prev_clique.setdefault(u, []).append((v, w))

    return Customization(
        direction,
        graph,
        hierarchy,
        OverlayIndex(direction, clique_levels),
        DownwardGraph(direction, down_levels),
        arc_reduction,
    )


@dataclass(frozen=True, eq=False)
class CustomizationPair:
    forward: Customization
    reverse: Customization

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CustomizationPair):
            return NotImplemented
        return all(
            a.overlay == b.overlay and a.downward == b.downward
            for a, b in ((self.forward, other.forward), (self.reverse, other.reverse))
        )

    __hash__ = None  # type: ignore[assignment]


def customize_both(
    graph: Graph,
    hierarchy: PartitionHierarchy,
    reverse: Graph | None = None,
    arc_reduction: bool = True,
) -> CustomizationPair:
    reverse = build_reverse(graph) if reverse is None else reverse
    return CustomizationPair(
        customize(graph, hierarchy, FORWARD, arc_reduction),
        customize(reverse, hierarchy, REVERSE, arc_reduction),
    )


def recustomize(pair: CustomizationPair, metric: Metric | np.ndarray) -> CustomizationPair:
    """Full re-customization of both directions for a new forward-aligned metric."""
    fwd = pair.forward.graph
    weights = metric.weights if isinstance(metric, Metric) else np.asarray(metric, dtype=np.int64)
    if len(weights) != fwd.arc_count:
        raise MetricError(f"metric has {len(weights)} weights, graph has {fwd.arc_count} arcs")
    tag = metric.tag if isinstance(metric, Metric) else fwd.metric_tag
    new_fwd = fwd.with_metric(weights, tag)
    new_rev = reverse_with_metric(pair.reverse.graph, weights)
    new_rev = new_rev.with_metric(new_rev.weights, tag)
    reduction = pair.forward.arc_reduction
    return CustomizationPair(
        customize(new_fwd, pair.forward.hierarchy, FORWARD, reduction),
        customize(new_rev, pair.reverse.hierarchy, REVERSE, reduction),
    )


def _write_arcs(stream: IO[bytes], arcs: ArcArrays) -> None:
    stream.write(struct.pack("<I", len(arcs[0])))
    for a in arcs:
        stream.write(np.ascontiguousarray(a, dtype="<u4").tobytes())


def _read_arcs(stream: IO[bytes]) -> ArcArrays:
    (count,) = struct.unpack("<I", stream.read(4))
    out = []
    for _ in range(3):
        raw = stream.read(4 * count)
        if len(raw) != 4 * count:
            raise SnapshotError("truncated overlay snapshot")
        out.append(np.frombuffer(raw, dtype="<u4").astype(np.int64))
    return out[0], out[1], out[2]


def save_overlay(pair: CustomizationPair, stream: IO[bytes]) -> None:
    """SALTOV01: L, counts, arc-reduction flag, metric digest, then per direction per level clique and downward arcs."""
    h = pair.forward.hierarchy
    stream.write(OVERLAY_MAGIC)
    stream.write(struct.pack("<I", h.levels))
    stream.write(np.asarray(h.level_spec, dtype="<u4").tobytes())
    stream.write(struct.pack("<I", int(pair.forward.arc_reduction)))
    stream.write(bytes.fromhex(pair.forward.metric_key))
    for cz in (pair.forward, pair.reverse):
        for lvl in range(h.levels):
            _write_arcs(stream, cz.overlay.levels[lvl])
            _write_arcs(stream, cz.downward.levels[lvl])


def load_overlay(stream: IO[bytes], graph: Graph, reverse: Graph, hierarchy: PartitionHierarchy) -> CustomizationPair:
    if stream.read(8) != OVERLAY_MAGIC:
        raise SnapshotError("not a SALTOV01 snapshot")
    (levels,) = struct.unpack("<I", stream.read(4))
    spec = tuple(np.frombuffer(stream.read(4 * levels), dtype="<u4").astype(np.int64).tolist())
    if spec != hierarchy.level_spec:
        raise SnapshotError(f"overlay level_spec {spec} does not match partition {hierarchy.level_spec}")
    (reduction,) = struct.unpack("<I", stream.read(4))
    digest = stream.read(8).hex()
    if digest != graph.metric_key:
        raise SnapshotError("overlay was customized for a different metric than the stored graph")
    out = []
    for direction, g in ((FORWARD, graph), (REVERSE, reverse)):
        cl, dn = [], []
        for _ in range(levels):
            cl.append(_read_arcs(stream))
            dn.append(_read_arcs(stream))
        out.append(Customization(direction, g, hierarchy, OverlayIndex(direction, cl), DownwardGraph(direction, dn), bool(reduction)))
    return CustomizationPair(out[0], out[1])
