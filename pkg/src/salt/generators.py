"""Desk-scale test networks.

``grid_graph(k)`` is the canonical GRID-k: a k x k bidirected grid with unit
weights, row-major ids and (x, y) = (column, row) coordinates.
``road_graph`` builds a jittered, partly one-way street lattice restricted to
its largest strongly connected component, with a travel-distance metric and
a speed-class travel-time metric over the same arcs.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import TRAVEL_DISTANCE, TRAVEL_TIME, Graph, Metric, from_arcs


def grid_graph(k: int, weights: np.ndarray | None = None) -> Graph:
    arcs = []
    for r in range(k):
        for c in range(k):
            v = r * k + c
            if c + 1 < k:
                arcs += [(v, v + 1, 1), (v + 1, v, 1)]
            if r + 1 < k:
                arcs += [(v, v + k, 1), (v + k, v, 1)]
    coords = [(c, r) for r in range(k) for c in range(k)]
    g = from_arcs(k * k, arcs, coords, TRAVEL_DISTANCE)
    if weights is not None:
        g = g.with_metric(weights)
    return g


def grid_metrics(graph: Graph, seed: int = 0) -> dict[str, Metric]:
    """Unit travel distances plus seeded speed-class travel times for a grid."""
    rng = np.random.Generator(np.random.PCG64(seed))
    td = np.ones(graph.arc_count, dtype=np.int64)
    tt = rng.choice(np.array([2, 3, 5, 8]), size=graph.arc_count)
    return {TRAVEL_DISTANCE: Metric(TRAVEL_DISTANCE, td), TRAVEL_TIME: Metric(TRAVEL_TIME, tt)}


def road_graph(side: int, seed: int = 0, drop: float = 0.12, oneway: float = 0.08) -> tuple[Graph, dict[str, Metric]]:
    """Return the travel-distance graph and both metrics aligned with its arcs."""
    rng = np.random.Generator(np.random.PCG64(seed))
    spacing = 100
    xy = np.array([(c * spacing, r * spacing) for r in range(side) for c in range(side)], dtype=np.int64)
    xy += rng.integers(-30, 31, size=xy.shape)
    speed_of_arc: dict[tuple[int, int], int] = {}
    arcs: list[tuple[int, int]] = []

    def street(u: int, v: int, speed: int) -> None:
        if rng.random() < drop:
            return
        if rng.random() < oneway:
            pair = [(u, v)] if rng.random() < 0.5 else [(v, u)]
        else:
            pair = [(u, v), (v, u)]
        for a in pair:
            arcs.append(a)
            speed_of_arc[a] = speed

    for r in range(side):
        for c in range(side):
            v = r * side + c
            # every 8th row/column is an arterial with a higher speed class
            if c + 1 < side:
                street(v, v + 1, 3 if r % 8 == 0 else 1)
            if r + 1 < side:
                street(v, v + side, 3 if c % 8 == 0 else 1)
            if c + 1 < side and r + 1 < side and rng.random() < 0.05:
                street(v, v + side + 1, 1)

    n = side * side
    src = np.array([a for a, _ in arcs])
    dst = np.array([b for _, b in arcs])
    mat = csr_matrix((np.ones(len(arcs)), (src, dst)), shape=(n, n))
    _, labels = connected_components(mat, directed=True, connection="strong")
    big = np.bincount(labels).argmax()
    keep = np.flatnonzero(labels == big)
    remap = -np.ones(n, dtype=np.int64)
    remap[keep] = np.arange(len(keep))

    td_arcs, tt_of = [], {}
    for u, v in arcs:
        if remap[u] < 0 or remap[v] < 0:
            continue
        length = max(1, int(round(float(np.hypot(*(xy[u] - xy[v]))))))
        a = (int(remap[u]), int(remap[v]))
        td_arcs.append((a[0], a[1], length))
        tt_of[a] = max(1, (length * 10) // (4 * speed_of_arc[(u, v)]))
    g = from_arcs(len(keep), td_arcs, xy[keep], TRAVEL_DISTANCE)
    tt = np.array([tt_of[(u, v)] for u, v, _ in g.arcs()], dtype=np.int64)
    metrics = {TRAVEL_DISTANCE: g.metric, TRAVEL_TIME: Metric(TRAVEL_TIME, tt)}
    return g, metrics
