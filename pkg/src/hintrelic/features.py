"""Feature schemas for the algorithm trace catalogue.

Every algorithm publishes a schema: an ordered list of named features, each
tagged with a stage (input / hint / output), a location (node / edge /
graph) and a kind (scalar / mask / mask_one / categorical / pointer).
Executors emit trajectories whose arrays conform to these schemas, the
serializer walks them in order, and the network builds encoders and
decoders from them.

Kinds and their array conventions for an n-node instance:

* ``scalar``       -- float64; shape (n,), (n, n) or () by location.
* ``mask``         -- int64 0/1; same shapes as scalar.
* ``mask_one``     -- int64 0/1 with exactly one hot entry (node location).
* ``categorical``  -- int64 class ids in [0, k); node location.
* ``pointer``      -- int64 node indices in [0, n); node location gives
  shape (n,), edge location gives shape (n, n) (a per-pair target node,
  used by the all-pairs path algorithm).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Stage(enum.Enum):
    INPUT = "input"
    HINT = "hint"
    OUTPUT = "output"


class Location(enum.Enum):
    NODE = "node"
    EDGE = "edge"
    GRAPH = "graph"


class Kind(enum.Enum):
    SCALAR = "scalar"
    MASK = "mask"
    MASK_ONE = "mask_one"
    CATEGORICAL = "categorical"
    POINTER = "pointer"


@dataclass(frozen=True)
class FeatureSpec:
    """One named feature of an algorithm's trace."""

    name: str
    stage: Stage
    location: Location
    kind: Kind
    num_classes: int = 0  # only meaningful for categorical features

    def __post_init__(self) -> None:
        if self.kind is Kind.CATEGORICAL and self.num_classes < 2:
            raise ValueError(f"categorical feature {self.name!r} needs >= 2 classes")
        if self.kind is Kind.MASK_ONE and self.location is not Location.NODE:
            raise ValueError(f"mask_one feature {self.name!r} must live on nodes")
        if self.kind is Kind.POINTER and self.location is Location.GRAPH:
            raise ValueError(f"pointer feature {self.name!r} cannot live on the graph")


def _f(name: str, stage: Stage, location: Location, kind: Kind, k: int = 0) -> FeatureSpec:
    return FeatureSpec(name, stage, location, kind, k)


# Node colouring used by the depth-first executors: 0 white, 1 grey, 2 black.
NUM_COLORS = 3

# Algorithm identifiers, grouped by augmentation family.
DFS_BASED = ("articulation_points", "bridges", "dfs", "scc", "topological_sort")
GRAPH_BASED = (
    "bellman_ford",
    "bfs",
    "dag_shortest_paths",
    "dijkstra",
    "floyd_warshall",
    "mst_kruskal",
    "mst_prim",
)
SORTING = ("insertion_sort", "bubble_sort", "quicksort", "heapsort")
SEARCHING = ("binary_search", "minimum")

ALGORITHMS: tuple[str, ...] = tuple(sorted(DFS_BASED + GRAPH_BASED + SORTING + SEARCHING))

# Algorithms whose instances carry an adjacency structure.
GRAPH_ALGORITHMS = tuple(sorted(DFS_BASED + GRAPH_BASED))
# Graph algorithms with a symmetric adjacency/weight matrix.
UNDIRECTED = (
    "articulation_points",
    "bridges",
    "bellman_ford",
    "bfs",
    "dijkstra",
    "floyd_warshall",
    "mst_kruskal",
    "mst_prim",
)
# Graph algorithms whose instances must be acyclic.
DAG_ALGORITHMS = ("topological_sort", "dag_shortest_paths")
# Graph algorithms with edge weights.
WEIGHTED = (
    "bellman_ford",
    "dag_shortest_paths",
    "dijkstra",
    "floyd_warshall",
    "mst_kruskal",
    "mst_prim",
)
# Graph algorithms that take a source node.
SOURCED = ("bellman_ford", "bfs", "dag_shortest_paths", "dijkstra", "mst_prim")

# Augmentation family per algorithm.
FAMILY_DFS = "dfs_based"
FAMILY_GRAPH = "graph_based"
FAMILY_SORTING = "sorting"
FAMILY_SEARCHING = "searching"

FAMILY_OF: dict[str, str] = {}
FAMILY_OF.update({a: FAMILY_DFS for a in DFS_BASED})
FAMILY_OF.update({a: FAMILY_GRAPH for a in GRAPH_BASED})
FAMILY_OF.update({a: FAMILY_SORTING for a in SORTING})
FAMILY_OF.update({a: FAMILY_SEARCHING for a in SEARCHING})

# Algorithms whose augmentations leave the base trajectory provably intact
# (the certifier demands a perfect prefix for these); the rest are
# approximate and certification only logs their divergence statistics.
EXACT_ALGORITHMS = frozenset(DFS_BASED) | frozenset(GRAPH_BASED) | {"insertion_sort"}

# Hints whose step-wise values the invariance objective contrasts.
CONTRASTED_HINTS: dict[str, tuple[str, ...]] = {
    "articulation_points": ("pi_h",),
    "bridges": ("pi_h",),
    "dfs": (),
    "scc": ("scc_id_h", "color", "s_prev"),
    "topological_sort": ("topo_h", "color", "s_prev"),
    "bellman_ford": ("pi_h",),
    "bfs": ("pi_h",),
    "dag_shortest_paths": ("pi_h", "topo_h", "color"),
    "dijkstra": ("pi_h",),
    "floyd_warshall": ("Pi_h",),
    "mst_kruskal": ("pi",),
    "mst_prim": ("pi_h",),
    "insertion_sort": ("pred_h",),
    "bubble_sort": ("pred_h",),
    "quicksort": ("pred_h",),
    "heapsort": ("pred_h", "parent"),
    "binary_search": ("pred_h",),
    "minimum": ("pred_h",),
}


def _graph_inputs(algorithm: str) -> list[FeatureSpec]:
    specs = [_f("pos", Stage.INPUT, Location.NODE, Kind.SCALAR)]
    if algorithm in SOURCED:
        specs.append(_f("s", Stage.INPUT, Location.NODE, Kind.MASK_ONE))
    specs.append(_f("adj", Stage.INPUT, Location.EDGE, Kind.MASK))
    if algorithm in WEIGHTED:
        specs.append(_f("A", Stage.INPUT, Location.EDGE, Kind.SCALAR))
    return specs


def _array_inputs() -> list[FeatureSpec]:
    return [
        _f("pos", Stage.INPUT, Location.NODE, Kind.SCALAR),
        _f("key", Stage.INPUT, Location.NODE, Kind.SCALAR),
    ]


def _dfs_state(pointer_name: str = "pi_h") -> list[FeatureSpec]:
    return [
        _f(pointer_name, Stage.HINT, Location.NODE, Kind.POINTER),
        _f("color", Stage.HINT, Location.NODE, Kind.CATEGORICAL, NUM_COLORS),
        _f("s_prev", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
    ]


def _build_schemas() -> dict[str, tuple[FeatureSpec, ...]]:
    s: dict[str, list[FeatureSpec]] = {}

    s["articulation_points"] = (
        _graph_inputs("articulation_points")
        + _dfs_state()
        + [
            _f("d_h", Stage.HINT, Location.NODE, Kind.SCALAR),
            _f("low_h", Stage.HINT, Location.NODE, Kind.SCALAR),
            _f("is_cut_h", Stage.HINT, Location.NODE, Kind.MASK),
            _f("is_cut", Stage.OUTPUT, Location.NODE, Kind.MASK),
        ]
    )
    s["bridges"] = (
        _graph_inputs("bridges")
        + _dfs_state()
        + [
            _f("d_h", Stage.HINT, Location.NODE, Kind.SCALAR),
            _f("low_h", Stage.HINT, Location.NODE, Kind.SCALAR),
            _f("is_bridge_h", Stage.HINT, Location.EDGE, Kind.MASK),
            _f("is_bridge", Stage.OUTPUT, Location.EDGE, Kind.MASK),
        ]
    )
    s["dfs"] = (
        _graph_inputs("dfs")
        + _dfs_state()
        + [_f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER)]
    )
    s["scc"] = _graph_inputs("scc") + [
        _f("scc_id_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("color", Stage.HINT, Location.NODE, Kind.CATEGORICAL, NUM_COLORS),
        _f("s_prev", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("f_h", Stage.HINT, Location.NODE, Kind.SCALAR),
        _f("phase", Stage.HINT, Location.GRAPH, Kind.MASK),
        _f("scc_id", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]
    s["topological_sort"] = _graph_inputs("topological_sort") + [
        _f("topo_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("color", Stage.HINT, Location.NODE, Kind.CATEGORICAL, NUM_COLORS),
        _f("s_prev", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("head_h", Stage.HINT, Location.NODE, Kind.MASK),
        _f("topo", Stage.OUTPUT, Location.NODE, Kind.POINTER),
        _f("topo_head", Stage.OUTPUT, Location.NODE, Kind.MASK_ONE),
    ]

    s["bellman_ford"] = _graph_inputs("bellman_ford") + [
        _f("pi_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("d_h", Stage.HINT, Location.NODE, Kind.SCALAR),
        _f("msk", Stage.HINT, Location.NODE, Kind.MASK),
        _f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]
    s["bfs"] = _graph_inputs("bfs") + [
        _f("pi_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("reach_h", Stage.HINT, Location.NODE, Kind.MASK),
        _f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]
    s["dag_shortest_paths"] = _graph_inputs("dag_shortest_paths") + [
        _f("pi_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("d_h", Stage.HINT, Location.NODE, Kind.SCALAR),
        _f("msk", Stage.HINT, Location.NODE, Kind.MASK),
        _f("topo_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("head_h", Stage.HINT, Location.NODE, Kind.MASK),
        _f("color", Stage.HINT, Location.NODE, Kind.CATEGORICAL, NUM_COLORS),
        _f("s_prev", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("phase", Stage.HINT, Location.GRAPH, Kind.MASK),
        _f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]
    s["dijkstra"] = _graph_inputs("dijkstra") + [
        _f("pi_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("d_h", Stage.HINT, Location.NODE, Kind.SCALAR),
        _f("mark", Stage.HINT, Location.NODE, Kind.MASK),
        _f("in_queue", Stage.HINT, Location.NODE, Kind.MASK),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]
    s["floyd_warshall"] = _graph_inputs("floyd_warshall") + [
        _f("Pi_h", Stage.HINT, Location.EDGE, Kind.POINTER),
        _f("D_h", Stage.HINT, Location.EDGE, Kind.SCALAR),
        _f("reach_h", Stage.HINT, Location.EDGE, Kind.MASK),
        _f("k", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("Pi", Stage.OUTPUT, Location.EDGE, Kind.POINTER),
    ]
    s["mst_kruskal"] = _graph_inputs("mst_kruskal") + [
        _f("pi", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("in_mst_h", Stage.HINT, Location.EDGE, Kind.MASK),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK),
        _f("v", Stage.HINT, Location.NODE, Kind.MASK),
        _f("in_mst", Stage.OUTPUT, Location.EDGE, Kind.MASK),
    ]
    s["mst_prim"] = _graph_inputs("mst_prim") + [
        _f("pi_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("key_h", Stage.HINT, Location.NODE, Kind.SCALAR),
        _f("mark", Stage.HINT, Location.NODE, Kind.MASK),
        _f("in_queue", Stage.HINT, Location.NODE, Kind.MASK),
        _f("u", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("pi", Stage.OUTPUT, Location.NODE, Kind.POINTER),
    ]

    sort_core = [
        _f("pred_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("i", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("j", Stage.HINT, Location.NODE, Kind.MASK_ONE),
    ]
    sort_out = [_f("pred", Stage.OUTPUT, Location.NODE, Kind.POINTER)]
    s["insertion_sort"] = _array_inputs() + list(sort_core) + sort_out
    s["bubble_sort"] = _array_inputs() + list(sort_core) + sort_out
    s["quicksort"] = _array_inputs() + [
        _f("pred_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("lo", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("hi", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("i", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("j", Stage.HINT, Location.NODE, Kind.MASK_ONE),
    ] + sort_out
    s["heapsort"] = _array_inputs() + [
        _f("pred_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("parent", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("i", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("j", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("in_heap", Stage.HINT, Location.NODE, Kind.MASK),
        _f("phase", Stage.HINT, Location.GRAPH, Kind.MASK),
    ] + sort_out

    s["binary_search"] = _array_inputs() + [
        _f("target", Stage.INPUT, Location.GRAPH, Kind.SCALAR),
        _f("pred_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("lo", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("hi", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("mid", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("return", Stage.OUTPUT, Location.NODE, Kind.MASK_ONE),
    ]
    s["minimum"] = _array_inputs() + [
        _f("pred_h", Stage.HINT, Location.NODE, Kind.POINTER),
        _f("min_h", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("i", Stage.HINT, Location.NODE, Kind.MASK_ONE),
        _f("min", Stage.OUTPUT, Location.NODE, Kind.MASK_ONE),
    ]

    frozen: dict[str, tuple[FeatureSpec, ...]] = {}
    for name, specs in s.items():
        seen: set[str] = set()
        for spec in specs:
            if spec.name in seen:
                raise ValueError(f"duplicate feature {spec.name!r} in {name}")
            seen.add(spec.name)
        frozen[name] = tuple(specs)
    return frozen


_SCHEMAS = _build_schemas()


def schema(algorithm: str) -> tuple[FeatureSpec, ...]:
    """The ordered feature schema for ``algorithm``.

    The returned tuple is the same object on every call (stable across
    calls); it lists inputs, then hints, then outputs.
    """
    try:
        return _SCHEMAS[algorithm]
    except KeyError:
        raise KeyError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}") from None


def stage_features(algorithm: str, stage: Stage) -> tuple[FeatureSpec, ...]:
    return tuple(f for f in schema(algorithm) if f.stage is stage)


def feature(algorithm: str, name: str) -> FeatureSpec:
    for f in schema(algorithm):
        if f.name == name:
            return f
    raise KeyError(f"algorithm {algorithm!r} has no feature {name!r}")


def contrasted_hints(algorithm: str) -> tuple[FeatureSpec, ...]:
    """Hint features contrasted by the invariance objective."""
    return tuple(feature(algorithm, name) for name in CONTRASTED_HINTS[algorithm])


def feature_shape(spec: FeatureSpec, n: int) -> tuple[int, ...]:
    if spec.location is Location.NODE:
        return (n,)
    if spec.location is Location.EDGE:
        return (n, n)
    return ()
