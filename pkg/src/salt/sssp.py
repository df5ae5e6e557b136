"""Single-source queries on the customized index: one-to-all, range and one-to-many.

Each query runs an upward search from the source over the union graph (only
the source's cells are refined) and then sweeps the downward arcs from level
L to level 1. At a level, every cell that does not contain the source is
visited in ascending cell id; its level-(l-1) vertices take the minimum over
the labeled level-l boundary vertices b of ``dist(b) + down(b, x)``.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import EmptyTargetsError
from .graph import INF, Metric
from .overlay import FORWARD
from .search import ensure_current, pick, union_search


def _sweep(cz, dist: list[int], s: int, only: list[set[int]] | None = None, threshold: int | None = None) -> None:
    h = cz.hierarchy
    cells = h.cell_lists
    down = cz.down_cells
    for lvl in range(h.levels, 0, -1):
        skip = cells[lvl][s]
        wanted = only[lvl] if only is not None else None
        for c, group in enumerate(down[lvl]):
            if c == skip or not group or (wanted is not None and c not in wanted):
                continue
            for b, arcs in group:
                db = dist[b]
                if db == INF or (threshold is not None and db > threshold):
                    continue
                for x, w in arcs:
                    nd = db + w
                    if nd < dist[x]:
                        dist[x] = nd


def one_to_all(index, s: int, direction: str = FORWARD, metric: Metric | None = None) -> np.ndarray:
    """Exact distances from ``s`` to every vertex (``INF`` when unreachable).

    With ``direction="reverse"`` the search runs on the reverse graph, i.e. the
    result holds distances *to* ``s``.
    """
    ensure_current(index, metric)
    cz = pick(index, direction)
    state, _ = union_search(cz, [s], [s])
    dist = state.distances().tolist()
    _sweep(cz, dist, s)
    return np.array(dist, dtype=np.int64)


def range_query(index, s: int, threshold: int, direction: str = FORWARD) -> list[tuple[int, int]]:
    """All ``(v, dist(s, v))`` with ``dist <= threshold``, sorted by vertex id."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    cz = pick(index, direction)
    state, _ = union_search(cz, [s], [s], limit=threshold)
    dist = state.distances().tolist()
    _sweep(cz, dist, s, threshold=threshold)
    return [(v, d) for v, d in enumerate(dist) if d <= threshold and d != INF]


def one_to_many(index, s: int, targets: Iterable[int], direction: str = FORWARD) -> list[tuple[int, int]]:
    """``(t, dist(s, t))`` for every target, in input order; the sweep only enters cells holding a target."""
    targets = list(targets)
    if not targets:
        raise EmptyTargetsError("one_to_many needs at least one target")
    cz = pick(index, direction)
    state, _ = union_search(cz, [s], [s])
    dist = state.distances().tolist()
    _sweep(cz, dist, s, only=cz.hierarchy.ancestor_cells(targets))
    return [(t, dist[t]) for t in targets]
