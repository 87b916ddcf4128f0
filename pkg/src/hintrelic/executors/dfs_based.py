"""Depth-first-search executors.

All five executors share one traversal discipline: restart at the
smallest-index white node, explore the smallest-index white neighbour
first, and emit exactly one frame per atomic event (a node discovery or a
node finish).  Every node contributes two frames per pass, so a single
pass costs exactly 2n frames.

Shared hints: ``color`` (0 white, 1 grey, 2 black), ``s_prev`` (stack
predecessor: the node below this one on the traversal stack, self at the
bottom) and ``u`` (the node the traversal stands on after the event).
A frame is Markov: colours plus ``u`` plus ``s_prev`` (plus per-algorithm
extras) determine the next event.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..instances import GraphInstance

Event = tuple[str, int, int]  # ("discover", node, parent) or ("finish", node, parent)


def dfs_events(adj: np.ndarray, roots: "list[int] | None" = None) -> Iterator[Event]:
    """Yield discover/finish events of a deterministic depth-first forest.

    ``roots`` fixes the restart order (defaults to ascending node index);
    each root that is still white starts a new tree.
    """
    n = adj.shape[0]
    color = np.zeros(n, dtype=np.int64)
    if roots is None:
        roots = list(range(n))
    for root in roots:
        if color[root] != 0:
            continue
        stack = [root]
        parent = {root: root}
        color[root] = 1
        yield ("discover", root, root)
        while stack:
            top = stack[-1]
            nxt = -1
            for w in np.flatnonzero(adj[top]):
                if color[w] == 0:
                    nxt = int(w)
                    break
            if nxt >= 0:
                color[nxt] = 1
                parent[nxt] = top
                stack.append(nxt)
                yield ("discover", nxt, top)
            else:
                stack.pop()
                color[top] = 2
                yield ("finish", top, parent[top])


class _DfsState:
    """Mutable shared hint state for the depth-first executors."""

    def __init__(self, n: int):
        self.n = n
        self.color = np.zeros(n, dtype=np.int64)
        self.s_prev = np.arange(n, dtype=np.int64)
        self.u = 0

    def reset_pass(self) -> None:
        self.color[:] = 0
        self.s_prev[:] = np.arange(self.n)

    def apply(self, event: Event) -> None:
        kind, v, p = event
        if kind == "discover":
            self.color[v] = 1
            self.s_prev[v] = p
            self.u = v
        else:
            self.color[v] = 2
            self.u = p

    def hints(self) -> dict[str, np.ndarray]:
        u = np.zeros(self.n, dtype=np.int64)
        u[self.u] = 1
        return {"color": self.color.copy(), "s_prev": self.s_prev.copy(), "u": u}


def run_dfs(instance: GraphInstance):
    """Plain depth-first search; outputs the forest's parent pointers."""
    adj = instance.edge_inputs["adj"]
    n = instance.n
    st = _DfsState(n)
    pi = np.arange(n, dtype=np.int64)
    frames = []
    for event in dfs_events(adj):
        kind, v, p = event
        if kind == "discover":
            pi[v] = p
        st.apply(event)
        frames.append({"pi_h": pi.copy(), **st.hints()})
    return frames, {"pi": pi.copy()}


def _run_lowpoint(instance: GraphInstance, marker_name: str, marker: np.ndarray, on_finish):
    """DFS with discovery times and lowpoints, shared by the articulation
    point and bridge executors.

    Lowpoints are fixed at finish time: low(v) = min over v's own
    discovery time, the discovery times of its non-parent neighbours
    (every non-tree edge of an undirected graph is a back edge, and
    neighbouring descendants have later discovery times so they never
    lower the minimum), and the lowpoints of v's tree children.

    ``on_finish(v, parent, pi, d, low, children)`` applies the cut /
    bridge rule, mutating ``marker`` in place; the frame snapshot picks
    the mutation up under ``marker_name``.
    """
    adj = instance.edge_inputs["adj"]
    n = instance.n
    st = _DfsState(n)
    pi = np.arange(n, dtype=np.int64)
    d = np.zeros(n, dtype=np.float64)
    low = np.zeros(n, dtype=np.float64)
    children = np.zeros(n, dtype=np.int64)
    clock = 0
    frames = []
    for event in dfs_events(adj):
        kind, v, p = event
        if kind == "discover":
            pi[v] = p
            clock += 1
            d[v] = clock
            if p != v:
                children[p] += 1
        else:
            lo = d[v]
            for w in np.flatnonzero(adj[v]):
                w = int(w)
                if w != pi[v]:
                    lo = min(lo, d[w])
                if w != v and pi[w] == v:
                    lo = min(lo, low[w])
            low[v] = lo
            on_finish(v, int(pi[v]), pi, d, low, children)
        st.apply(event)
        frames.append(
            {
                "pi_h": pi.copy(),
                **st.hints(),
                "d_h": d.copy(),
                "low_h": low.copy(),
                marker_name: marker.copy(),
            }
        )
    return frames


def run_articulation_points(instance: GraphInstance):
    """Cut vertices via lowpoints.

    When a child v finishes: its parent u is a cut vertex if v's subtree
    cannot reach strictly above u (low(v) >= d(u)) and u is not a tree
    root; a root is a cut vertex iff it has at least two tree children
    (checked at the root's own finish).  A discovered node u is a root
    exactly when pi[u] == u.
    """
    n = instance.n
    is_cut = np.zeros(n, dtype=np.int64)

    def on_finish(v, parent, pi, d, low, children):
        if parent == v:
            if children[v] >= 2:
                is_cut[v] = 1
        elif low[v] >= d[parent] and pi[parent] != parent:
            is_cut[parent] = 1

    frames = _run_lowpoint(instance, "is_cut_h", is_cut, on_finish)
    return frames, {"is_cut": is_cut.copy()}


def run_bridges(instance: GraphInstance):
    """Bridges via lowpoints: the tree edge (u, v) is a bridge iff v's
    subtree cannot reach u or above except through that edge
    (low(v) > d(u)); marked symmetrically at v's finish."""
    n = instance.n
    is_bridge = np.zeros((n, n), dtype=np.int64)

    def on_finish(v, parent, pi, d, low, children):
        if parent != v and low[v] > d[parent]:
            is_bridge[parent, v] = 1
            is_bridge[v, parent] = 1

    frames = _run_lowpoint(instance, "is_bridge_h", is_bridge, on_finish)
    return frames, {"is_bridge": is_bridge.copy()}


def run_topological_sort(instance: GraphInstance):
    """Topological order by reverse finish time.

    The order is published as a successor chain: at each finish the node
    is pushed in front of the current chain head, so ``topo_h[x]`` is the
    node that follows x in topological order (self for the final node)
    and ``head_h`` marks the current first node.  Inputs are sampled
    acyclic; the executor assumes so.
    """
    adj = instance.edge_inputs["adj"]
    n = instance.n
    st = _DfsState(n)
    topo = np.arange(n, dtype=np.int64)
    head_mask = np.zeros(n, dtype=np.int64)
    head = -1
    frames = []
    for event in dfs_events(adj):
        kind, v, p = event
        if kind == "finish":
            topo[v] = head if head >= 0 else v
            head = v
            head_mask[:] = 0
            head_mask[v] = 1
        st.apply(event)
        frames.append({"topo_h": topo.copy(), **st.hints(), "head_h": head_mask.copy()})
    outputs = {"topo": topo.copy(), "topo_head": head_mask.copy()}
    return frames, outputs


def run_scc(instance: GraphInstance):
    """Strongly connected components, two-pass style: a full depth-first
    pass records finish order; a second pass over the transposed graph,
    restarting at unvisited nodes in decreasing finish order, assigns
    every tree the id of its root.  ``phase`` flips from 0 to 1 when the
    second pass begins and node colours reset with it; ``f_h`` keeps the
    first pass's finish counters so a frame is Markov in either phase.
    """
    adj = instance.edge_inputs["adj"]
    n = instance.n
    st = _DfsState(n)
    scc_id = np.arange(n, dtype=np.int64)
    f = np.zeros(n, dtype=np.float64)
    frames = []
    clock = 0
    for event in dfs_events(adj):
        kind, v, p = event
        if kind == "finish":
            clock += 1
            f[v] = clock
        st.apply(event)
        frames.append(
            {
                "scc_id_h": scc_id.copy(),
                **st.hints(),
                "f_h": f.copy(),
                "phase": np.int64(0),
            }
        )
    st.reset_pass()
    order = sorted(range(n), key=lambda v: -f[v])
    root_of: dict[int, int] = {}
    for event in dfs_events(adj.T, roots=order):
        kind, v, p = event
        if kind == "discover":
            root_of[v] = v if p == v else root_of[p]
            scc_id[v] = root_of[v]
        st.apply(event)
        frames.append(
            {
                "scc_id_h": scc_id.copy(),
                **st.hints(),
                "f_h": f.copy(),
                "phase": np.int64(1),
            }
        )
    return frames, {"scc_id": scc_id.copy()}
