"""Point-to-point engines: Dijkstra, bidirectional ALT, CRP and SALT-p2p.

CRP and SALT-p2p search the union graph of the overlay cliques and the
level-1 cells of s and t (see :mod:`salt.search`). SALT-p2p adds landmark
potentials: ``lower_bound(v, t)`` in unidirectional mode, and the average
potential ``(lower_bound(v, t) - lower_bound(s, v)) / 2`` in bidirectional
mode. Bidirectional keys are kept doubled so they stay integral.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Sequence

from .dijkstra import dijkstra, path_to
from .errors import StaleIndexError
from .graph import INF, Graph, Metric
from .landmarks import LandmarkTable, lower_bound, lower_bounds_from, lower_bounds_to
from .overlay import FORWARD, REVERSE
from .search import SearchState, ensure_current, level_function, pick, union_search

UNI = "uni"
BI = "bi"

# above this size potentials are computed on demand instead of for every vertex
_EAGER_POTENTIAL_LIMIT = 200_000


@dataclass
class P2PResult:
    distance: int
    settled: int
    path: list[int] = field(default_factory=list)
    meeting: int = -1


class _LazyPotential(dict):
    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def __missing__(self, v: int) -> int:
        val = self[v] = self.fn(v)
        return val


def target_potential(table: LandmarkTable, t: int) -> Sequence[int]:
    if table.vertex_count <= _EAGER_POTENTIAL_LIMIT:
        return lower_bounds_to(table, t).tolist()
    return _LazyPotential(lambda v: lower_bound(table, v, t))


def source_potential(table: LandmarkTable, s: int) -> Sequence[int]:
    if table.vertex_count <= _EAGER_POTENTIAL_LIMIT:
        return lower_bounds_from(table, s).tolist()
    return _LazyPotential(lambda v: lower_bound(table, s, v))


def dijkstra_p2p(graph: Graph, s: int, t: int) -> P2PResult:
    dist, parent, settled = dijkstra(graph, s, target=t)
    d = dist[t]
    return P2PResult(d, settled, path_to(parent, t) if d != INF else [])


def _bidirectional(
    fwd_adj,
    bwd_adj,
    n: int,
    s: int,
    t: int,
    pot_f: Sequence[int] | None = None,
    pot_b: Sequence[int] | None = None,
) -> P2PResult:
    """Bidirectional label setting; ``fwd_adj(v)``/``bwd_adj(v)`` yield (head, w).

    With potentials the keys are ``2*d + pot``, and the search stops once the
    two queue minima sum to at least ``2*mu``. Without, plain distances and
    ``mu``. The tentative best ``mu`` is updated both when relaxing and when
    settling a vertex that carries a label from the other side.
    """
    scale = 2 if pot_f is not None else 1
    dist = ({s: 0}, {t: 0})
    par = ({s: -1}, {t: -1})
    done = (set(), set())
    heaps = ([(pot_f[s] if pot_f is not None else 0, s)], [(pot_b[t] if pot_b is not None else 0, t)])
    pots = (pot_f, pot_b)
    adjs = (fwd_adj, bwd_adj)
    mu, meet = (0, s) if s == t else (INF, -1)
    settled = 0
    while heaps[0] and heaps[1]:
        if heaps[0][0][0] + heaps[1][0][0] >= scale * mu:
            break
        side = 0 if heaps[0][0][0] <= heaps[1][0][0] else 1
        key, u = heapq.heappop(heaps[side])
        if u in done[side]:
            continue
        done[side].add(u)
        settled += 1
        mine, other = dist[side], dist[1 - side]
        du = mine[u]
        if u in other and du + other[u] < mu:
            mu, meet = du + other[u], u
        pot = pots[side]
        for v, w in adjs[side](u):
            nd = du + w
            if nd < mine.get(v, INF):
                mine[v] = nd
                par[side][v] = u
                heapq.heappush(heaps[side], (scale * nd + pot[v] if pot is not None else nd, v))
                if v in other and nd + other[v] < mu:
                    mu, meet = nd + other[v], v
    path: list[int] = []
    if meet != -1:
        x = meet
        while x != -1:
            path.append(x)
            x = par[0][x]
        path.reverse()
        x = par[1][meet]
        while x != -1:
            path.append(x)
            x = par[1][x]
    return P2PResult(mu, settled, path, meet)


def bi_alt(graph: Graph, reverse: Graph, table: LandmarkTable, s: int, t: int) -> P2PResult:
    table.check(graph)
    pi_f = target_potential(table, t)
    pi_r = source_potential(table, s)
    pot_f = _Combined(pi_f, pi_r, 1)
    pot_b = _Combined(pi_f, pi_r, -1)
    return _bidirectional(graph.adjacency.__getitem__, reverse.adjacency.__getitem__, graph.vertex_count, s, t, pot_f, pot_b)


class _Combined:
    """Doubled average potential: ``sign * (pi_f - pi_r)``."""

    __slots__ = ("pi_f", "pi_r", "sign")

    def __init__(self, pi_f, pi_r, sign: int):
        self.pi_f, self.pi_r, self.sign = pi_f, pi_r, sign

    def __getitem__(self, v: int) -> int:
        return self.sign * (self.pi_f[v] - self.pi_r[v])


def _union_adjacency(cz, level):
    adj0 = cz.graph.adjacency
    lout = cz.level_out

    def arcs(v: int):
        lvl = level(v)
        return adj0[v] if lvl == 0 else lout[lvl][v]

    return arcs


def _check(index, table: LandmarkTable | None = None, metric: Metric | None = None) -> None:
    ensure_current(index, metric)
    fwd, bwd = pick(index, FORWARD), pick(index, REVERSE)
    if fwd.hierarchy is not bwd.hierarchy and fwd.hierarchy != bwd.hierarchy:
        raise StaleIndexError("forward and reverse customizations use different partitions")
    if table is not None:
        table.check(fwd.graph)


def _reverse_cz(index):
    return pick(index, REVERSE)


def crp_query(index, s: int, t: int, bidirectional: bool = True, metric: Metric | None = None) -> P2PResult:
    """Dijkstra on the union graph; bidirectional by default, meeting on the overlay.

    With ``metric`` the overlay is first checked to be customized for it.
    """
    _check(index, metric=metric)
    fwd = pick(index, FORWARD)
    if not bidirectional:
        state, settled = union_search(fwd, [s], [s, t], target=t)
        d = state.label(t)
        return P2PResult(d, settled, state.chain(t) if d != INF else [])
    level = level_function(fwd.hierarchy, [s, t])
    return _bidirectional(
        _union_adjacency(fwd, level), _union_adjacency(_reverse_cz(index), level), fwd.graph.vertex_count, s, t
    )


def salt_p2p(
    index,
    s: int,
    t: int,
    mode: str = UNI,
    table: LandmarkTable | None = None,
    state: SearchState | None = None,
    metric: Metric | None = None,
) -> P2PResult:
    """ALT on the union graph. ``mode`` is ``"uni"`` (default) or ``"bi"``."""
    table = index.table if table is None else table
    _check(index, table, metric)
    fwd = pick(index, FORWARD)
    pi_f = target_potential(table, t)
    if mode == UNI:
        st, settled = union_search(fwd, [s], [s, t], target=t, potential=pi_f, state=state)
        d = st.label(t)
        return P2PResult(d, settled, st.chain(t) if d != INF else [])
    if mode != BI:
        raise ValueError(f"unknown mode {mode!r}")
    pi_r = source_potential(table, s)
    level = level_function(fwd.hierarchy, [s, t])
    return _bidirectional(
        _union_adjacency(fwd, level),
        _union_adjacency(_reverse_cz(index), level),
        fwd.graph.vertex_count,
        s,
        t,
        _Combined(pi_f, pi_r, 1),
        _Combined(pi_f, pi_r, -1),
    )
