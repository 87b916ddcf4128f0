"""Deterministic algorithm executors emitting per-step hint trajectories.

``execute`` is the single entry point: it validates the instance, runs
the registered executor and wraps the emitted frames into a checked
:class:`~hintrelic.trajectories.Trajectory`.  Per-executor frame-count
bounds are published by :func:`step_bound` and enforced on every run.
"""

from __future__ import annotations

import math

from ..instances import GraphInstance, validate_instance
from ..trajectories import SnapshotFrame, Trajectory, validate_trajectory
from . import dfs_based, kruskal, paths, searching, sorting

_EXECUTORS = {
    "articulation_points": dfs_based.run_articulation_points,
    "bridges": dfs_based.run_bridges,
    "dfs": dfs_based.run_dfs,
    "scc": dfs_based.run_scc,
    "topological_sort": dfs_based.run_topological_sort,
    "bellman_ford": paths.run_bellman_ford,
    "bfs": paths.run_bfs,
    "dag_shortest_paths": paths.run_dag_shortest_paths,
    "dijkstra": paths.run_dijkstra,
    "floyd_warshall": paths.run_floyd_warshall,
    "mst_kruskal": kruskal.run_mst_kruskal,
    "mst_prim": paths.run_mst_prim,
    "insertion_sort": sorting.run_insertion_sort,
    "bubble_sort": sorting.run_bubble_sort,
    "quicksort": sorting.run_quicksort,
    "heapsort": sorting.run_heapsort,
    "binary_search": searching.run_binary_search,
    "minimum": searching.run_minimum,
}


def step_bound(algorithm: str, n: int) -> int:
    """Hard upper bound on emitted frames for an n-node instance."""
    if algorithm in ("articulation_points", "bridges", "dfs", "topological_sort"):
        return 2 * n
    if algorithm == "scc":
        return 4 * n
    if algorithm in ("bfs", "bellman_ford"):
        return n + 1
    if algorithm == "dag_shortest_paths":
        return 3 * n
    if algorithm in ("dijkstra", "mst_prim", "floyd_warshall"):
        return n
    if algorithm == "mst_kruskal":
        return max(1, n * (n - 1) // 2)
    if algorithm in ("insertion_sort", "bubble_sort", "quicksort", "heapsort"):
        return n * n + n
    if algorithm == "binary_search":
        return math.ceil(math.log2(n)) + 1 if n > 1 else 1
    if algorithm == "minimum":
        return max(1, n - 1)
    raise KeyError(f"unknown algorithm {algorithm!r}")


def execute(instance: GraphInstance, seed: int | None = None) -> Trajectory:
    """Run ``instance``'s algorithm and return its hint trajectory.

    Executions are pure functions of the instance; ``seed`` is only
    recorded on the trajectory for provenance.  Malformed instances are
    rejected with a diagnostic before anything runs.
    """
    validate_instance(instance)
    runner = _EXECUTORS.get(instance.algorithm)
    if runner is None:
        raise KeyError(f"no executor registered for {instance.algorithm!r}")
    raw_frames, outputs = runner(instance)
    frames = [SnapshotFrame(t + 1, values) for t, values in enumerate(raw_frames)]
    traj = Trajectory(instance, frames, outputs, seed)
    validate_trajectory(traj, step_bound(instance.algorithm, instance.n))
    return traj
