import os
import sys

import numpy as np
import pytest

from salt import SaltIndex, bisect_partition, default_level_spec, grid_graph, grid_metrics, road_graph
from salt.graph import TRAVEL_DISTANCE, TRAVEL_TIME

REPORT: list[str] = []


def report(line: str) -> None:
    """Acceptance lines are echoed live and repeated in the terminal summary."""
    REPORT.append(line)
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)


def make_index(graph, spec=None, arc_reduction=True, landmarks=None, landmark_count=24):
    h = bisect_partition(graph, spec or default_level_spec(graph.vertex_count))
    return SaltIndex.build(graph, h, landmark_count=landmark_count, landmarks=landmarks, arc_reduction=arc_reduction)


def rng(*seed):
    return np.random.Generator(np.random.PCG64(list(seed)))


@pytest.fixture(scope="session")
def grid4():
    return grid_graph(4)


@pytest.fixture(scope="session")
def grid6_indexes():
    g = grid_graph(6)
    return {tag: make_index(g.with_metric(m)) for tag, m in grid_metrics(g, 6).items()}


@pytest.fixture(scope="session")
def grid8_indexes():
    g = grid_graph(8)
    return {tag: make_index(g.with_metric(m)) for tag, m in grid_metrics(g, 8).items()}


@pytest.fixture(scope="session")
def small_road():
    g, metrics = road_graph(20, seed=3)
    return g, metrics


@pytest.fixture(scope="session")
def small_road_indexes(small_road):
    g, metrics = small_road
    return {tag: make_index(g.with_metric(metrics[tag])) for tag in (TRAVEL_TIME, TRAVEL_DISTANCE)}


@pytest.fixture(params=[TRAVEL_TIME, TRAVEL_DISTANCE])
def metric_tag(request):
    return request.param


@pytest.fixture
def env_flag():
    return os.environ.get
