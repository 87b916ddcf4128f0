"""Minimum spanning forest by edge inspection in weight order.

One frame per inspected edge.  The union-find forest is published
directly as the ``pi`` pointer hint (no path compression, so the hint
evolves only at unions); roots merge towards the smaller index.  A graph
with no edges emits a single initial frame with empty endpoint masks.
"""

from __future__ import annotations

import numpy as np

from ..instances import GraphInstance


def _root(pi: np.ndarray, v: int) -> int:
    while pi[v] != v:
        v = int(pi[v])
    return v


def run_mst_kruskal(instance: GraphInstance):
    adj = instance.edge_inputs["adj"]
    w = instance.edge_inputs["A"]
    n = instance.n
    pi = np.arange(n, dtype=np.int64)
    in_mst = np.zeros((n, n), dtype=np.int64)
    edges = sorted(
        (float(w[a, b]), a, b)
        for a in range(n)
        for b in range(a + 1, n)
        if adj[a, b]
    )
    frames = []

    def emit(a: int | None, b: int | None) -> None:
        u_mask = np.zeros(n, dtype=np.int64)
        v_mask = np.zeros(n, dtype=np.int64)
        if a is not None:
            u_mask[a] = 1
            v_mask[b] = 1
        frames.append(
            {"pi": pi.copy(), "in_mst_h": in_mst.copy(), "u": u_mask, "v": v_mask}
        )

    if not edges:
        emit(None, None)
    for _, a, b in edges:
        ra, rb = _root(pi, a), _root(pi, b)
        if ra != rb:
            if ra < rb:
                pi[rb] = ra
            else:
                pi[ra] = rb
            in_mst[a, b] = in_mst[b, a] = 1
        emit(a, b)
    return frames, {"in_mst": in_mst.copy()}
