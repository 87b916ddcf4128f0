"""In-place comparison sort executors.

Nodes are the items of the input array in their original positions; keys
never move.  The executors permute an order list of node ids and publish
it per frame as the predecessor chain ``pred_h``: the first node in the
current order points at itself, every other node points at the node just
before it.  The output ``pred`` is the chain of the fully sorted order.

``i`` and ``j`` mark the nodes touched by the step (the compared pair for
bubble sort and the partition step of quicksort, the inserted node and
its new predecessor for insertion sort, the compared parent/child or the
swapped pair for heapsort).  Executors that perform zero comparisons
(single-item arrays) emit one frame of the initial state with both marks
on the sole node.
"""

from __future__ import annotations

import numpy as np

from ..instances import GraphInstance


def order_to_pred(order: "list[int] | np.ndarray", n: int) -> np.ndarray:
    """Predecessor chain of an order list (first element points at itself)."""
    pred = np.empty(n, dtype=np.int64)
    order = list(order)
    pred[order[0]] = order[0]
    for k in range(1, len(order)):
        pred[order[k]] = order[k - 1]
    return pred


def sorted_pred(keys: np.ndarray) -> np.ndarray:
    """The output chain: predecessor pointers of the ascending key order."""
    return order_to_pred(np.argsort(keys, kind="stable"), keys.shape[0])


class _SortTrace:
    def __init__(self, instance: GraphInstance):
        self.keys = instance.node_inputs["key"]
        self.n = instance.n
        self.order = list(range(self.n))
        self.frames: list[dict] = []

    def key_at(self, pos: int) -> float:
        return float(self.keys[self.order[pos]])

    def emit(self, i_node: int, j_node: int, extra: dict | None = None) -> None:
        values = {"pred_h": order_to_pred(self.order, self.n)}
        if extra:
            values.update(extra)
        for name, node in (("i", i_node), ("j", j_node)):
            mask = np.zeros(self.n, dtype=np.int64)
            mask[node] = 1
            values[name] = mask
        self.frames.append(values)

    def finish(self):
        return self.frames, {"pred": sorted_pred(self.keys)}


def run_bubble_sort(instance: GraphInstance):
    """One frame per adjacent comparison; the frame records the compared
    nodes and the chain after the swap decision."""
    tr = _SortTrace(instance)
    n = tr.n
    if n == 1:
        tr.emit(0, 0)
        return tr.finish()
    for rnd in range(n - 1):
        for p in range(n - 1 - rnd):
            left, right = tr.order[p], tr.order[p + 1]
            if tr.keys[left] > tr.keys[right]:
                tr.order[p], tr.order[p + 1] = right, left
            tr.emit(left, right)
    return tr.finish()


def run_insertion_sort(instance: GraphInstance):
    """One frame per inserted item: item p of the original order is moved
    left to its slot in the sorted prefix; ``i`` marks the inserted node,
    ``j`` the node it now follows (itself when it becomes the head)."""
    tr = _SortTrace(instance)
    n = tr.n
    if n == 1:
        tr.emit(0, 0)
        return tr.finish()
    for p in range(1, n):
        node = tr.order[p]
        slot = p
        while slot > 0 and tr.keys[tr.order[slot - 1]] > tr.keys[node]:
            slot -= 1
        del tr.order[p]
        tr.order.insert(slot, node)
        after = tr.order[slot - 1] if slot > 0 else node
        tr.emit(node, after)
    return tr.finish()


def run_quicksort(instance: GraphInstance):
    """Iterative Lomuto partitioning, left segment first.

    One frame per pivot comparison (``i`` the compared node, ``j`` the
    pivot) plus one per pivot placement (both marks on the pivot);
    ``lo``/``hi`` mark the nodes currently at the segment's endpoints.
    """
    tr = _SortTrace(instance)
    n = tr.n
    if n == 1:
        tr.emit(0, 0, {"lo": _one(0, 1), "hi": _one(0, 1)})
        return tr.finish()
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if lo >= hi:
            continue
        pivot = tr.order[hi]
        border = lo - 1
        for p in range(lo, hi):
            node = tr.order[p]
            if tr.keys[node] <= tr.keys[pivot]:
                border += 1
                tr.order[border], tr.order[p] = tr.order[p], tr.order[border]
            tr.emit(node, pivot, _segment_marks(tr, lo, hi))
        dest = border + 1
        tr.order[dest], tr.order[hi] = tr.order[hi], tr.order[dest]
        tr.emit(pivot, pivot, _segment_marks(tr, lo, hi))
        stack.append((dest + 1, hi))
        stack.append((lo, dest - 1))
    return tr.finish()


def _one(node: int, n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=np.int64)
    mask[node] = 1
    return mask


def _segment_marks(tr: _SortTrace, lo: int, hi: int) -> dict:
    return {"lo": _one(tr.order[lo], tr.n), "hi": _one(tr.order[hi], tr.n)}


def run_heapsort(instance: GraphInstance):
    """Max-heap build then repeated extraction.

    One frame per sift comparison (``i`` the sifted node, ``j`` the
    largest child, or the sifted node itself when the sift stops) and one
    per root-to-tail extraction swap.  ``parent`` points every in-heap
    node at its heap parent (root and out-of-heap nodes point at
    themselves), ``in_heap`` marks the live heap region and ``phase``
    flips from build (0) to extract (1).
    """
    tr = _SortTrace(instance)
    n = tr.n
    state = {"size": n, "phase": 0}

    def extra() -> dict:
        parent = np.arange(n, dtype=np.int64)
        in_heap = np.zeros(n, dtype=np.int64)
        for pos in range(state["size"]):
            in_heap[tr.order[pos]] = 1
            if pos > 0:
                parent[tr.order[pos]] = tr.order[(pos - 1) // 2]
        return {"parent": parent, "in_heap": in_heap, "phase": np.int64(state["phase"])}

    def sift(pos: int) -> None:
        while True:
            left, right = 2 * pos + 1, 2 * pos + 2
            largest = pos
            if left < state["size"] and tr.key_at(left) > tr.key_at(largest):
                largest = left
            if right < state["size"] and tr.key_at(right) > tr.key_at(largest):
                largest = right
            node, child = tr.order[pos], tr.order[largest]
            if largest == pos:
                tr.emit(node, node, extra())
                return
            tr.order[pos], tr.order[largest] = child, node
            tr.emit(node, child, extra())
            pos = largest

    if n == 1:
        tr.emit(0, 0, extra())
        return tr.finish()
    for start in range(n // 2 - 1, -1, -1):
        sift(start)
    state["phase"] = 1
    while state["size"] > 1:
        root, last = tr.order[0], tr.order[state["size"] - 1]
        tr.order[0], tr.order[state["size"] - 1] = last, root
        state["size"] -= 1
        tr.emit(root, last, extra())
        sift(0)
    return tr.finish()
