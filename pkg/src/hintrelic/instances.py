"""Problem instances and the seeded instance sampler.

An instance is the immutable input side of a trajectory: node, edge and
graph features named by the algorithm's input schema.  The sampler draws
Erdos-Renyi graphs (edge probability from a small configured set) or key
arrays with all-distinct uniform keys, deterministically from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import features as F
from .seeding import rng_for

# Edge probabilities the graph sampler draws from, one per instance.
EDGE_PROBABILITIES = (0.3, 0.5, 0.7)


@dataclass
class GraphInstance:
    """Input features for one problem instance.

    ``node_inputs`` maps name -> (n,) array, ``edge_inputs`` maps name ->
    (n, n) array, ``graph_inputs`` maps name -> 0-d array.  Masks and
    mask_one features are int64 0/1 arrays; scalars are float64.
    """

    algorithm: str
    n: int
    node_inputs: dict[str, np.ndarray] = field(default_factory=dict)
    edge_inputs: dict[str, np.ndarray] = field(default_factory=dict)
    graph_inputs: dict[str, np.ndarray] = field(default_factory=dict)

    def input_array(self, name: str) -> np.ndarray:
        for table in (self.node_inputs, self.edge_inputs, self.graph_inputs):
            if name in table:
                return table[name]
        raise KeyError(f"instance has no input {name!r}")

    def copy(self) -> "GraphInstance":
        return GraphInstance(
            self.algorithm,
            self.n,
            {k: v.copy() for k, v in self.node_inputs.items()},
            {k: v.copy() for k, v in self.edge_inputs.items()},
            {k: v.copy() for k, v in self.graph_inputs.items()},
        )


def _table_for(instance: GraphInstance, location: F.Location) -> dict[str, np.ndarray]:
    if location is F.Location.NODE:
        return instance.node_inputs
    if location is F.Location.EDGE:
        return instance.edge_inputs
    return instance.graph_inputs


def validate_instance(instance: GraphInstance) -> None:
    """Check an instance against its schema; raise ValueError on any defect."""
    n = instance.n
    if n < 1:
        raise ValueError(f"instance must have n >= 1, got {n}")
    specs = F.stage_features(instance.algorithm, F.Stage.INPUT)
    for table, loc in (
        (instance.node_inputs, F.Location.NODE),
        (instance.edge_inputs, F.Location.EDGE),
        (instance.graph_inputs, F.Location.GRAPH),
    ):
        expected = {s.name for s in specs if s.location is loc}
        if set(table) != expected:
            raise ValueError(
                f"{instance.algorithm}: {loc.value} inputs {sorted(table)} "
                f"do not match schema {sorted(expected)}"
            )
    for spec in specs:
        arr = _table_for(instance, spec.location)[spec.name]
        shape = F.feature_shape(spec, n)
        if arr.shape != shape:
            raise ValueError(f"input {spec.name!r} has shape {arr.shape}, wants {shape}")
        if spec.kind is F.Kind.SCALAR:
            if arr.dtype != np.float64:
                raise ValueError(f"scalar input {spec.name!r} must be float64")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"scalar input {spec.name!r} contains non-finite values")
        else:
            if arr.dtype != np.int64:
                raise ValueError(f"{spec.kind.value} input {spec.name!r} must be int64")
            if spec.kind in (F.Kind.MASK, F.Kind.MASK_ONE):
                if not np.isin(arr, (0, 1)).all():
                    raise ValueError(f"mask input {spec.name!r} has values outside 0/1")
            if spec.kind is F.Kind.MASK_ONE and int(arr.sum()) != 1:
                raise ValueError(f"mask_one input {spec.name!r} must have exactly one 1")
    adj = instance.edge_inputs.get("adj")
    if adj is not None and np.any(np.diag(adj) != 0):
        raise ValueError("adjacency has self loops")


def positions(n: int) -> np.ndarray:
    """Node position feature: index scaled into [0, 1)."""
    return np.arange(n, dtype=np.float64) / n


def _distinct_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform [0, 1) draws with duplicates rejection-resampled."""
    vals = rng.random(size)
    while np.unique(vals).size != size:  # pragma: no cover - measure-zero branch
        vals = rng.random(size)
    return vals


def _sample_adjacency(rng: np.random.Generator, algorithm: str, n: int) -> np.ndarray:
    p = rng.choice(EDGE_PROBABILITIES)
    coins = rng.random((n, n)) < p
    np.fill_diagonal(coins, False)
    if algorithm in F.UNDIRECTED:
        upper = np.triu(coins, k=1)
        adj = upper | upper.T
    elif algorithm in F.DAG_ALGORITHMS:
        order = rng.permutation(n)
        forward = order[:, None] < order[None, :]
        adj = coins & forward
    else:
        adj = coins
    return adj.astype(np.int64)


def _sample_weights(rng: np.random.Generator, algorithm: str, adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    raw = _distinct_uniform(rng, n * n).reshape(n, n)
    if algorithm in F.UNDIRECTED:
        raw = np.triu(raw, k=1)
        raw = raw + raw.T
    return np.where(adj == 1, raw, 0.0)


def sample_instance(algorithm: str, n: int, seed: int, master_seed: int = 0) -> GraphInstance:
    """Draw one instance of size ``n`` deterministically from ``seed``."""
    if algorithm not in F.ALGORITHMS:
        raise KeyError(f"unknown algorithm {algorithm!r}")
    is_graph = algorithm in F.GRAPH_ALGORITHMS
    if is_graph and n < 2:
        raise ValueError(f"graph algorithm {algorithm!r} needs n >= 2, got {n}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = rng_for(master_seed, "instance", algorithm, n, seed)
    inst = GraphInstance(algorithm, n)
    inst.node_inputs["pos"] = positions(n)
    if is_graph:
        if algorithm in F.SOURCED:
            s = np.zeros(n, dtype=np.int64)
            s[int(rng.integers(n))] = 1
            inst.node_inputs["s"] = s
        adj = _sample_adjacency(rng, algorithm, n)
        inst.edge_inputs["adj"] = adj
        if algorithm in F.WEIGHTED:
            inst.edge_inputs["A"] = _sample_weights(rng, algorithm, adj)
    else:
        keys = _distinct_uniform(rng, n)
        if algorithm == "binary_search":
            keys = np.sort(keys)
            target = rng.random()
            while np.any(keys == target):  # pragma: no cover - measure-zero branch
                target = rng.random()
            inst.graph_inputs["target"] = np.float64(target)
        inst.node_inputs["key"] = keys
    validate_instance(inst)
    return inst


def make_array_instance(
    algorithm: str, keys: "np.ndarray | list[float]", target: float | None = None
) -> GraphInstance:
    """Build a key-array instance by hand (sorting / searching algorithms)."""
    keys = np.asarray(keys, dtype=np.float64)
    inst = GraphInstance(algorithm, keys.size)
    inst.node_inputs["pos"] = positions(keys.size)
    inst.node_inputs["key"] = keys
    if algorithm == "binary_search":
        if target is None:
            raise ValueError("binary_search instance needs a target")
        inst.graph_inputs["target"] = np.float64(target)
    validate_instance(inst)
    return inst


def make_graph_instance(
    algorithm: str,
    adj: np.ndarray,
    weights: np.ndarray | None = None,
    source: int | None = None,
) -> GraphInstance:
    """Build a graph instance by hand from an adjacency matrix."""
    adj = np.asarray(adj, dtype=np.int64)
    n = adj.shape[0]
    inst = GraphInstance(algorithm, n)
    inst.node_inputs["pos"] = positions(n)
    if algorithm in F.SOURCED:
        s = np.zeros(n, dtype=np.int64)
        s[0 if source is None else source] = 1
        inst.node_inputs["s"] = s
    inst.edge_inputs["adj"] = adj
    if algorithm in F.WEIGHTED:
        if weights is None:
            weights = adj.astype(np.float64)
        inst.edge_inputs["A"] = np.where(adj == 1, np.asarray(weights, dtype=np.float64), 0.0)
    validate_instance(inst)
    return inst


def permute_instance(instance: GraphInstance, perm: np.ndarray) -> GraphInstance:
    """Relabel nodes: old node i becomes node perm[i].  Used to probe
    permutation equivariance of models; all node/edge features are
    conjugated, graph features are untouched."""
    perm = np.asarray(perm)
    n = instance.n
    if sorted(perm.tolist()) != list(range(n)):
        raise ValueError("perm must be a permutation of range(n)")
    out = GraphInstance(instance.algorithm, n)
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    for name, arr in instance.node_inputs.items():
        out.node_inputs[name] = arr[inv]
    for name, arr in instance.edge_inputs.items():
        out.edge_inputs[name] = arr[np.ix_(inv, inv)]
    for name, arr in instance.graph_inputs.items():
        out.graph_inputs[name] = np.copy(arr)
    return out
