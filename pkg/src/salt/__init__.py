"""SALT: overlay plus landmark road-network queries (p2p, one-to-all, range, one-to-many, kNN)."""

from .engine import SaltIndex, load_index, reordered, save_index
from .errors import SaltError
from .generators import grid_graph, grid_metrics, road_graph
from .graph import INF, TRAVEL_DISTANCE, TRAVEL_TIME, Graph, Metric, build_reverse, parse_dimacs_co, parse_dimacs_gr
from .knn import ObjectSet, knn_oracle, knn_query
from .overlay import FORWARD, REVERSE
from .p2p import bi_alt, crp_query, dijkstra_p2p, salt_p2p
from .partition import CONTINENTAL_LEVEL_SPEC, bisect_partition, default_level_spec, load_partition_file
from .sssp import one_to_all, one_to_many, range_query

__version__ = "0.1.0"
