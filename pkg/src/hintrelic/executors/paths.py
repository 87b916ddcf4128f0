"""Shortest-path executors.

Frame conventions: one frame per synchronous relaxation round (breadth
first search, Bellman-Ford), per visited node (Dijkstra), per pivot node
(all-pairs), or per traversal event / relaxed node (the DAG variant).
Distances of unreached nodes are kept at 0 with a companion reach mask so
every emitted scalar stays finite; parents of unreached nodes stay at the
node itself.
"""

from __future__ import annotations

import numpy as np

from ..instances import GraphInstance
from .dfs_based import _DfsState, dfs_events


def run_bfs(instance: GraphInstance):
    """Synchronous breadth-first search.

    Each step expands every reached node at once; a newly reached node
    takes its smallest-index reached neighbour as parent.  The round that
    reaches nothing new is still emitted, so the trace ends with its own
    termination evidence and an edgeless graph yields exactly one frame.
    """
    adj = instance.edge_inputs["adj"]
    n = instance.n
    reach = instance.node_inputs["s"].astype(bool)
    pi = np.arange(n, dtype=np.int64)
    frames = []
    while True:
        newly = adj[reach].any(axis=0) & ~reach
        for v in np.flatnonzero(newly):
            pi[v] = int(np.flatnonzero(adj[:, v] & reach)[0])
        reach = reach | newly
        frames.append({"pi_h": pi.copy(), "reach_h": reach.astype(np.int64)})
        if not newly.any():
            break
    return frames, {"pi": pi.copy()}


def run_bellman_ford(instance: GraphInstance):
    """Synchronous Bellman-Ford rounds.

    Every round relaxes all edges against the previous round's state;
    among equal candidate improvements the smallest-index sender wins.
    The first stable round is emitted and terminates the trace.
    """
    adj = instance.edge_inputs["adj"]
    w = instance.edge_inputs["A"]
    n = instance.n
    msk = instance.node_inputs["s"].astype(bool)
    d = np.zeros(n, dtype=np.float64)
    pi = np.arange(n, dtype=np.int64)
    frames = []
    while True:
        new_d, new_pi, new_msk = d.copy(), pi.copy(), msk.copy()
        for v in range(n):
            best = d[v] if msk[v] else None
            for u in np.flatnonzero(adj[:, v]):
                if not msk[u]:
                    continue
                cand = d[u] + w[u, v]
                if best is None or cand < best:
                    best, new_pi[v] = cand, u
            if best is not None:
                new_d[v], new_msk[v] = best, True
        changed = (
            not np.array_equal(new_d, d)
            or not np.array_equal(new_pi, pi)
            or not np.array_equal(new_msk, msk)
        )
        d, pi, msk = new_d, new_pi, new_msk
        frames.append(
            {"pi_h": pi.copy(), "d_h": d.copy(), "msk": msk.astype(np.int64)}
        )
        if not changed:
            break
    return frames, {"pi": pi.copy()}


def _run_greedy_visit(instance: GraphInstance, priority_name: str, relax):
    """Shared skeleton for Dijkstra and Prim: repeatedly finalise the
    frontier node with the smallest priority (ties to the smaller index),
    then relax its neighbours.  Once the frontier empties, the remaining
    unreachable nodes are visited in index order without relaxing, so the
    trace always has exactly n frames.
    """
    adj = instance.edge_inputs["adj"]
    n = instance.n
    src = int(np.flatnonzero(instance.node_inputs["s"])[0])
    prio = np.zeros(n, dtype=np.float64)
    mark = np.zeros(n, dtype=np.int64)
    in_queue = np.zeros(n, dtype=np.int64)
    pi = np.arange(n, dtype=np.int64)
    in_queue[src] = 1
    frames = []
    for _ in range(n):
        queued = np.flatnonzero(in_queue)
        if queued.size:
            u = int(queued[np.argmin(prio[queued])])
            reached = True
        else:
            u = int(np.flatnonzero(mark == 0)[0])
            reached = False
        mark[u], in_queue[u] = 1, 0
        if reached:
            for v in np.flatnonzero(adj[u]):
                v = int(v)
                if mark[v]:
                    continue
                cand = relax(u, v, prio)
                if not in_queue[v] or cand < prio[v]:
                    prio[v], pi[v], in_queue[v] = cand, u, 1
        u_mask = np.zeros(n, dtype=np.int64)
        u_mask[u] = 1
        frames.append(
            {
                "pi_h": pi.copy(),
                priority_name: prio.copy(),
                "mark": mark.copy(),
                "in_queue": in_queue.copy(),
                "u": u_mask,
            }
        )
    return frames, {"pi": pi.copy()}


def run_dijkstra(instance: GraphInstance):
    w = instance.edge_inputs["A"]
    return _run_greedy_visit(instance, "d_h", lambda u, v, d: d[u] + w[u, v])


def run_mst_prim(instance: GraphInstance):
    w = instance.edge_inputs["A"]
    return _run_greedy_visit(instance, "key_h", lambda u, v, key: w[u, v])


def run_dag_shortest_paths(instance: GraphInstance):
    """Single-source shortest paths on an acyclic graph.

    Phase 0 is a depth-first topological sort of the part of the graph
    reachable from the source (one frame per traversal event); phase 1
    walks the resulting successor chain and relaxes each node's outgoing
    edges (one frame per node).  Unreachable nodes keep distance 0 with
    an unset reach mask and themselves as parent.
    """
    adj = instance.edge_inputs["adj"]
    w = instance.edge_inputs["A"]
    n = instance.n
    src = int(np.flatnonzero(instance.node_inputs["s"])[0])
    st = _DfsState(n)
    topo = np.arange(n, dtype=np.int64)
    head_mask = np.zeros(n, dtype=np.int64)
    head = -1
    pi = np.arange(n, dtype=np.int64)
    d = np.zeros(n, dtype=np.float64)
    msk = np.zeros(n, dtype=np.int64)
    msk[src] = 1
    frames = []

    def frame(phase: int, u_override: int | None = None) -> dict:
        values = {
            "pi_h": pi.copy(),
            "d_h": d.copy(),
            "msk": msk.copy(),
            "topo_h": topo.copy(),
            "head_h": head_mask.copy(),
            **st.hints(),
            "phase": np.int64(phase),
        }
        if u_override is not None:
            u = np.zeros(n, dtype=np.int64)
            u[u_override] = 1
            values["u"] = u
        return values

    for event in dfs_events(adj, roots=[src]):
        kind, v, p = event
        if kind == "finish":
            topo[v] = head if head >= 0 else v
            head = v
            head_mask[:] = 0
            head_mask[v] = 1
        st.apply(event)
        frames.append(frame(0))

    x = head
    while True:
        for v in np.flatnonzero(adj[x]):
            v = int(v)
            cand = d[x] + w[x, v]
            if not msk[v] or cand < d[v]:
                d[v], pi[v], msk[v] = cand, x, 1
        frames.append(frame(1, u_override=x))
        nxt = int(topo[x])
        if nxt == x:
            break
        x = nxt
    return frames, {"pi": pi.copy()}


def run_floyd_warshall(instance: GraphInstance):
    """All-pairs shortest paths with one frame per pivot node.

    ``Pi_h[i, j]`` is the predecessor of j on the current best i-to-j
    path (j itself while no path is known), ``D_h`` the current distance
    (0 where unreached) and ``reach_h`` the known-path mask.
    """
    adj = instance.edge_inputs["adj"].astype(bool)
    w = instance.edge_inputs["A"]
    n = instance.n
    reach = adj | np.eye(n, dtype=bool)
    d = np.where(adj, w, 0.0)
    pi = np.where(adj, np.arange(n, dtype=np.int64)[:, None], np.arange(n, dtype=np.int64)[None, :])
    np.fill_diagonal(pi, np.arange(n))
    np.fill_diagonal(d, 0.0)
    frames = []
    for k in range(n):
        via = reach[:, k, None] & reach[None, k, :]
        cand = d[:, k, None] + d[None, k, :]
        better = via & (~reach | (cand < d))
        d = np.where(better, cand, d)
        pi = np.where(better, pi[k, :][None, :], pi)
        reach = reach | via
        k_mask = np.zeros(n, dtype=np.int64)
        k_mask[k] = 1
        frames.append(
            {
                "Pi_h": pi.copy(),
                "D_h": d.copy(),
                "reach_h": reach.astype(np.int64),
                "k": k_mask,
            }
        )
    return frames, {"Pi": pi.copy()}
