import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salt.dijkstra import dijkstra, distances
from salt.errors import CountError, DuplicateError, FormatError, MetricError, PermutationError, RangeError, SnapshotError, WeightError
from salt.generators import grid_graph, road_graph
from salt.graph import (
    INF,
    Metric,
    NodePermutation,
    apply_permutation,
    build_reverse,
    from_arcs,
    level_order_permutation,
    load_graph,
    parse_dimacs_co,
    parse_dimacs_gr,
    reverse_with_metric,
    save_graph,
    write_dimacs_co,
    write_dimacs_gr,
)
from salt.partition import bisect_partition

from conftest import rng


def parse(text):
    return parse_dimacs_gr(io.StringIO(text))


def arc_set(g):
    return sorted(g.arcs())


def test_smallest_file():
    g = parse("p sp 2 1\na 1 2 5")
    assert g.vertex_count == 2 and g.arc_count == 1
    assert arc_set(g) == [(0, 1, 5)]


def test_comments_skipped():
    g = parse("c hi\np sp 3 2\na 1 2 1\nc mid\na 2 3 1")
    assert arc_set(g) == [(0, 1, 1), (1, 2, 1)]


@pytest.mark.parametrize(
    "text, error",
    [
        ("p sp 2 1\na 1 3 5", RangeError),
        ("p sp 2 1\na 0 1 5", RangeError),
        ("p sp 2 1\na 1 2 0", WeightError),
        ("p sp 2 1\na 1 2 -4", WeightError),
        (f"p sp 2 1\na 1 2 {2**31}", WeightError),
        ("p sp 2 2\na 1 2 5", CountError),
        ("p sp 2 1\na 1 2 5\na 2 1 5", CountError),
        ("p xx 2 1\na 1 2 5", FormatError),
        ("a 1 2 5", FormatError),
        ("", FormatError),
        ("p sp two 1\na 1 2 5", FormatError),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse(text)


def test_error_names_source_and_line():
    with pytest.raises(RangeError) as exc:
        parse_dimacs_gr(io.StringIO("p sp 2 1\na 1 3 5"), source="x.gr")
    assert exc.value.line == 2 and "x.gr:2:" in str(exc.value)


def test_max_weight_accepted():
    assert arc_set(parse(f"p sp 2 1\na 1 2 {2**31 - 1}")) == [(0, 1, 2**31 - 1)]


def test_self_loops_dropped_parallel_min():
    g = parse("p sp 2 4\na 1 1 3\na 1 2 9\na 1 2 4\na 2 1 7")
    assert arc_set(g) == [(0, 1, 4), (1, 0, 7)]


def test_coordinates():
    assert parse_dimacs_co(io.StringIO("p aux sp co 1\nv 1 10 20"), 1).tolist() == [[10, 20]]
    with pytest.raises(CountError):
        parse_dimacs_co(io.StringIO("p aux sp co 2\nv 1 0 0"), 2)
    with pytest.raises(DuplicateError):
        parse_dimacs_co(io.StringIO("p aux sp co 1\nv 1 1 1\nv 1 2 2"), 1)
    with pytest.raises(CountError):
        parse_dimacs_co(io.StringIO("p aux sp co 3\nv 1 0 0"), 2)
    with pytest.raises(FormatError):
        parse_dimacs_co(io.StringIO("p aux sp co 1\nv 1 a 0"), 1)


def test_csr_invariants(grid4):
    assert np.all(np.diff(grid4.offsets) >= 0)
    assert grid4.offsets[-1] == grid4.arc_count == 48
    assert grid4.heads.max() < grid4.vertex_count
    assert grid4.weights.min() > 0


def test_reverse_examples(grid4):
    g = from_arcs(2, [(0, 1, 5)])
    assert arc_set(build_reverse(g)) == [(1, 0, 5)]
    # symmetric graph: identical arc multiset
    assert arc_set(build_reverse(grid4)) == arc_set(grid4)
    assert arc_set(build_reverse(build_reverse(grid4))) == arc_set(grid4)


def test_reverse_distances():
    g, metrics = road_graph(12, seed=1)
    g = g.with_metric(metrics["travel_time"])
    r = build_reverse(g)
    gen = rng(7)
    for s, t in gen.integers(0, g.vertex_count, size=(100, 2)).tolist():
        assert dijkstra(g, s)[0][t] == dijkstra(r, t)[0][s]


def test_reverse_with_metric_tracks_forward_arcs():
    g, metrics = road_graph(10, seed=2)
    r = build_reverse(g)
    tt = metrics["travel_time"].weights
    r2 = reverse_with_metric(r, tt)
    assert arc_set(r2) == arc_set(build_reverse(g.with_metric(tt)))


def test_permutation_identity_and_swap():
    g = grid_graph(4)
    assert apply_permutation(g, NodePermutation.identity(16)) == g
    iso = from_arcs(4, [(0, 1, 2)])
    swapped = apply_permutation(iso, [0, 1, 3, 2])  # vertices 2 and 3 are isolated
    assert swapped == iso
    moved = apply_permutation(iso, [1, 0, 2, 3])
    assert arc_set(moved) == [(1, 0, 2)]


def test_permutation_errors(grid4):
    with pytest.raises(PermutationError):
        apply_permutation(grid4, [0] * 16)
    with pytest.raises(PermutationError):
        NodePermutation.from_new_to_old([0, 0, 1])
    with pytest.raises(PermutationError):
        apply_permutation(grid4, list(range(15)))


def test_permutation_maps_compose():
    p = NodePermutation.from_new_to_old(rng(3).permutation(50))
    assert np.array_equal(p.old_to_new[p.new_to_old], np.arange(50))
    assert np.array_equal(p.new_to_old[p.old_to_new], np.arange(50))


def test_level_order_distances_unchanged(grid4):
    h = bisect_partition(grid4, (4, 2))
    perm = level_order_permutation(h.boundary_level, h.level1)
    g2 = apply_permutation(grid4, perm)
    gen = rng(11)
    o2n = perm.old_to_new
    for s, t in gen.integers(0, 16, size=(1000, 2)).tolist():
        assert dijkstra(grid4, s)[0][t] == dijkstra(g2, int(o2n[s]))[0][int(o2n[t])]


def test_level_order_rule():
    bl = np.array([0, 2, 1, 2, 0, 1])
    c1 = np.array([3, 1, 0, 0, 2, 0])
    perm = level_order_permutation(bl, c1)
    # level 2 first (cell 0 before cell 1), then level 1 (cells 0, 0 by id), then interior by cell
    assert perm.new_to_old.tolist() == [3, 1, 2, 5, 4, 0]


def test_random_relabel_distances():
    g, metrics = road_graph(12, seed=4)
    perm = rng(5).permutation(g.vertex_count)
    g2 = apply_permutation(g, perm)
    gen = rng(6)
    for s, t in gen.integers(0, g.vertex_count, size=(100, 2)).tolist():
        assert dijkstra(g, s)[0][t] == dijkstra(g2, int(perm[s]))[0][int(perm[t])]


arc_lists = st.integers(min_value=1, max_value=12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(1, 2**31 - 1)),
            max_size=40,
        ),
    )
)


@settings(max_examples=60, deadline=None)
@given(arc_lists)
def test_dimacs_round_trip(data):
    n, arcs = data
    g = from_arcs(n, arcs)
    buf = io.StringIO()
    write_dimacs_gr(g, buf)
    assert parse(buf.getvalue()) == g


@settings(max_examples=40, deadline=None)
@given(arc_lists)
def test_reverse_is_involution(data):
    n, arcs = data
    g = from_arcs(n, arcs)
    assert arc_set(build_reverse(build_reverse(g))) == arc_set(g)


def test_coordinate_round_trip():
    coords = np.array([[1, -2], [30, 4], [-5, 6]])
    buf = io.StringIO()
    write_dimacs_co(coords, buf)
    assert parse_dimacs_co(io.StringIO(buf.getvalue()), 3).tolist() == coords.tolist()


def test_snapshot_round_trip(grid4):
    buf = io.BytesIO()
    save_graph(grid4, buf)
    raw = buf.getvalue()
    assert raw[:8] == b"SALTGR01"
    assert np.frombuffer(raw[8:16], dtype="<u4").tolist() == [16, 48]
    back = load_graph(io.BytesIO(raw), grid4.metric_tag)
    assert back == grid4
    buf2 = io.BytesIO()
    save_graph(back, buf2)
    assert buf2.getvalue() == raw
    with pytest.raises(SnapshotError):
        load_graph(io.BytesIO(b"NOTSALT!" + raw[8:]))
    with pytest.raises(SnapshotError):
        load_graph(io.BytesIO(raw[:-3]))


def test_metric_validation(grid4):
    with pytest.raises(MetricError):
        grid4.with_metric(np.ones(3, dtype=np.int64))
    with pytest.raises(Exception):
        Metric("travel_time", np.array([1, 0]))
    with pytest.raises(Exception):
        Metric("speed", np.array([1, 1]))
    doubled = grid4.with_metric(grid4.weights * 2)
    assert doubled.metric_key != grid4.metric_key


def test_dijkstra_basics(grid4):
    assert distances(grid4, 0)[15] == 6
    g = from_arcs(3, [(0, 1, 1)])
    d = distances(g, 0)
    assert d.tolist() == [0, 1, INF]
    dist, parent, settled = dijkstra(grid4, 0, target=15)
    assert dist[15] == 6 and settled <= 16


def test_dijkstra_target_stop_keeps_final_label():
    # vertex 2 ties with the target at distance 2 and has the smaller id
    g = from_arcs(4, [(0, 1, 1), (1, 3, 1), (0, 2, 2)])
    dist, parent, settled = dijkstra(g, 0, target=3)
    assert dist[3] == 2 and parent[3] == 1
    assert settled == 2  # 0 and 1; neither 2 nor the target is popped
    assert dist[2] == INF
