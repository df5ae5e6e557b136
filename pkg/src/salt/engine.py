"""The assembled SALT index: graph, partition, both customizations and the landmark table."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from pathlib import Path

import numpy as np

from .graph import (
    TRAVEL_TIME,
    Graph,
    Metric,
    NodePermutation,
    apply_permutation,
    build_reverse,
    load_graph,
    save_graph,
)
from .landmarks import (
    DEFAULT_LANDMARKS,
    LandmarkTable,
    build_landmark_table,
    grasp_engine,
    load_landmarks,
    save_landmarks,
    select_partition_corners,
)
from .overlay import Customization, CustomizationPair, customize_both, load_overlay, recustomize, save_overlay
from .partition import PartitionHierarchy, load_partition, reorder_by_level, save_partition

log = logging.getLogger(__name__)


@dataclass
class SaltIndex:
    graph: Graph
    reverse: Graph
    hierarchy: PartitionHierarchy
    pair: CustomizationPair
    table: LandmarkTable
    permutation: NodePermutation | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def forward(self) -> Customization:
        return self.pair.forward

    @property
    def backward(self) -> Customization:
        return self.pair.reverse

    @property
    def metric_key(self) -> str:
        return self.graph.metric_key

    @classmethod
    def build(
        cls,
        graph: Graph,
        hierarchy: PartitionHierarchy,
        landmark_count: int = DEFAULT_LANDMARKS,
        landmarks: list[int] | None = None,
        arc_reduction: bool = True,
        seed: int = 0,
    ) -> "SaltIndex":
        timings = {}
        t0 = time.perf_counter()
        reverse = build_reverse(graph)
        pair = customize_both(graph, hierarchy, reverse, arc_reduction)
        t1 = time.perf_counter()
        if landmarks is None:
            landmarks = select_partition_corners(hierarchy, graph.coordinates, landmark_count, graph, seed)
        table = build_landmark_table(graph, landmarks, grasp_engine(pair))
        t2 = time.perf_counter()
        timings.update(customization=t1 - t0, landmarks=t2 - t1, total=t2 - t0)
        log.info("customization %.3fs, landmarks %.3fs", t1 - t0, t2 - t1)
        return cls(graph, reverse, hierarchy, pair, table, None, timings)

    def recustomize(self, metric: Metric | np.ndarray) -> "SaltIndex":
        """Fresh customization plus landmark distances for new weights; landmarks stay fixed."""
        t0 = time.perf_counter()
        pair = recustomize(self.pair, metric)
        t1 = time.perf_counter()
        table = build_landmark_table(pair.forward.graph, self.table.landmarks.tolist(), grasp_engine(pair))
        t2 = time.perf_counter()
        timings = dict(customization=t1 - t0, landmarks=t2 - t1, total=t2 - t0)
        return SaltIndex(pair.forward.graph, pair.reverse.graph, self.hierarchy, pair, table, self.permutation, timings)


def reordered(graph: Graph, hierarchy: PartitionHierarchy) -> tuple[Graph, PartitionHierarchy, NodePermutation]:
    """Relabel so boundary vertices of higher levels get smaller ids, ties by level-1 cell."""
    perm = reorder_by_level(graph, hierarchy)
    g = apply_permutation(graph, perm)
    return g, hierarchy.permuted(perm), perm



SNAPSHOT_FILES = {
    "graph": "graph.saltgr",
    "partition": "partition.saltpt",
    "overlay": "overlay.saltov",
    "landmarks": "landmarks.saltlm",
}


def save_index(index: SaltIndex, directory: str | Path) -> dict[str, Path]:
    """Write the four snapshots into ``directory``; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {key: directory / name for key, name in SNAPSHOT_FILES.items()}
    with open(paths["graph"], "wb") as f:
        save_graph(index.graph, f)
    with open(paths["partition"], "wb") as f:
        save_partition(index.hierarchy, f, index.permutation)
    with open(paths["overlay"], "wb") as f:
        save_overlay(index.pair, f)
    with open(paths["landmarks"], "wb") as f:
        save_landmarks(index.table, f)
    return paths


def load_index(directory: str | Path, metric_tag: str = TRAVEL_TIME) -> SaltIndex:
    directory = Path(directory)
    with open(directory / SNAPSHOT_FILES["graph"], "rb") as f:
        graph = load_graph(f, metric_tag)
    reverse = build_reverse(graph)
    with open(directory / SNAPSHOT_FILES["partition"], "rb") as f:
        hierarchy, perm = load_partition(f, graph)
    with open(directory / SNAPSHOT_FILES["overlay"], "rb") as f:
        pair = load_overlay(f, graph, reverse, hierarchy)
    with open(directory / SNAPSHOT_FILES["landmarks"], "rb") as f:
        table = load_landmarks(f, graph.metric_key)
    table.check(graph)
    return SaltIndex(graph, reverse, hierarchy, pair, table, perm)
