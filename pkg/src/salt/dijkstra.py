"""Plain binary-heap Dijkstra over a graph's adjacency lists.

This is both the level-0 baseline engine and the oracle the other engines are
checked against, so it deliberately uses nothing but the raw arcs.
"""

from __future__ import annotations

import heapq
from typing import Iterable

import numpy as np

from .graph import INF, Graph


def dijkstra(
    graph: Graph,
    sources: int | Iterable[int],
    target: int | None = None,
    limit: int | None = None,
) -> tuple[list[int], list[int], int]:
    """Return ``(dist, parent, settled)``; unreached entries hold ``INF`` and parent ``-1``.

    Stops once the next key reaches ``dist[target]`` (that label is then final)
    or exceeds ``limit``. Ties are popped by smaller vertex id.
    """
    adj = graph.adjacency
    n = graph.vertex_count
    dist = [INF] * n
    parent = [-1] * n
    done = [False] * n
    heap: list[tuple[int, int]] = []
    for s in [sources] if isinstance(sources, int) else sources:
        dist[s] = 0
        heap.append((0, s))
    heapq.heapify(heap)
    settled = 0
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        if limit is not None and d > limit:
            break
        if target is not None and d >= dist[target]:
            break
        done[u] = True
        settled += 1
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    if target is not None or limit is not None:
        # labels of unsettled vertices are only tentative
        for v in range(n):
            if not done[v] and v != target:
                dist[v] = INF
                parent[v] = -1
    return dist, parent, settled


def distances(graph: Graph, source: int) -> np.ndarray:
    return np.array(dijkstra(graph, source)[0], dtype=np.int64)


def path_to(parent: list[int], t: int) -> list[int]:
    out = []
    while t != -1:
        out.append(t)
        t = parent[t]
    return out[::-1]
