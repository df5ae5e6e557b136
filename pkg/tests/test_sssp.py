import numpy as np
import pytest

from salt.dijkstra import dijkstra
from salt.errors import EmptyTargetsError, StaleIndexError
from salt.graph import INF, Metric, build_reverse, from_arcs
from salt.overlay import FORWARD, REVERSE, customize
from salt.sssp import one_to_all, one_to_many, range_query

from conftest import make_index, rng


def oracle(idx, s, direction):
    g = idx.graph if direction == FORWARD else idx.reverse
    return np.array(dijkstra(g, s)[0])


@pytest.mark.parametrize("direction", [FORWARD, REVERSE])
def test_one_to_all_grid6(grid6_indexes, direction):
    for idx in grid6_indexes.values():
        for s in rng(6).integers(0, 36, size=20).tolist():
            assert np.array_equal(one_to_all(idx, s, direction), oracle(idx, s, direction))


@pytest.mark.parametrize("direction", [FORWARD, REVERSE])
def test_one_to_all_road(small_road_indexes, direction):
    for idx in small_road_indexes.values():
        n = idx.graph.vertex_count
        for s in rng(7).integers(0, n, size=10).tolist():
            assert np.array_equal(one_to_all(idx, s, direction), oracle(idx, s, direction))


def test_reverse_equals_forward_on_reverse_graph(small_road_indexes):
    idx = small_road_indexes["travel_time"]
    cz = customize(build_reverse(idx.graph), idx.hierarchy)
    for s in (0, 5, 77):
        assert np.array_equal(one_to_all(idx, s, REVERSE), one_to_all(cz, s))


def test_sink_vertex():
    coords = [(0, 0), (1, 0), (2, 0), (3, 0)]
    g = from_arcs(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)], coords)
    idx = make_index(g, spec=(2,), landmark_count=2)
    assert one_to_all(idx, 3).tolist() == [INF, INF, INF, 0]


def test_range(grid6_indexes):
    idx = grid6_indexes["travel_distance"]
    gen = rng(3)
    for s in gen.integers(0, 36, size=10).tolist():
        assert range_query(idx, s, 0) == [(s, 0)]
        d = oracle(idx, s, FORWARD)
        assert range_query(idx, s, 3) == [(v, x) for v, x in enumerate(d.tolist()) if x <= 3]
        ecc = int(d.max())
        assert range_query(idx, s, ecc) == list(enumerate(d.tolist()))
    with pytest.raises(ValueError):
        range_query(idx, 0, -1)


@pytest.mark.parametrize("direction", [FORWARD, REVERSE])
def test_range_road(small_road_indexes, direction):
    idx = small_road_indexes["travel_time"]
    n = idx.graph.vertex_count
    for s in rng(4).integers(0, n, size=8).tolist():
        d = oracle(idx, s, direction).tolist()
        for theta in (0, 7, 40, 150, 10**9):
            assert range_query(idx, s, theta, direction) == [(v, x) for v, x in enumerate(d) if x <= theta]


def test_one_to_many(grid6_indexes, small_road_indexes):
    idx = grid6_indexes["travel_time"]
    assert one_to_many(idx, 7, [7]) == [(7, 0)]
    gen = rng(5)
    for s in gen.integers(0, 36, size=20).tolist():
        targets = gen.integers(0, 36, size=50).tolist()
        d = oracle(idx, s, FORWARD)
        assert one_to_many(idx, s, targets) == [(t, d[t]) for t in targets]
        assert [x for _, x in one_to_many(idx, s, range(36))] == one_to_all(idx, s).tolist()
    road = small_road_indexes["travel_distance"]
    n = road.graph.vertex_count
    for s in gen.integers(0, n, size=5).tolist():
        targets = gen.integers(0, n, size=50).tolist()
        for direction in (FORWARD, REVERSE):
            d = oracle(road, s, direction)
            assert one_to_many(road, s, targets, direction) == [(t, d[t]) for t in targets]
    with pytest.raises(EmptyTargetsError):
        one_to_many(idx, 0, [])


def test_deterministic(small_road_indexes):
    idx = small_road_indexes["travel_time"]
    assert np.array_equal(one_to_all(idx, 3), one_to_all(idx, 3))


def test_stale_metric(grid6_indexes):
    idx = grid6_indexes["travel_time"]
    one_to_all(idx, 0, metric=idx.graph.metric)
    with pytest.raises(StaleIndexError):
        one_to_all(idx, 0, metric=Metric("travel_time", idx.graph.weights + 1))
