"""Array search executors.

Both publish the static array-order predecessor chain ``pred_h``
(element p points at element p-1, the first at itself) every frame, so
the contrastable hint surface matches the sorting family.
"""

from __future__ import annotations

import numpy as np

from ..instances import GraphInstance


def _array_pred(n: int) -> np.ndarray:
    pred = np.arange(n, dtype=np.int64) - 1
    pred[0] = 0
    return pred


def _one(idx: int, n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=np.int64)
    mask[idx] = 1
    return mask


def run_binary_search(instance: GraphInstance):
    """Bisection for the rightmost key <= target (0 if the target is
    below every key).  One frame per probe, recording the probe index and
    the shrunken bounds; a single-element array emits one initial frame.
    """
    keys = instance.node_inputs["key"]
    target = float(instance.graph_inputs["target"])
    n = instance.n
    pred = _array_pred(n)
    lo, hi = 0, n - 1
    frames = []
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if keys[mid] <= target:
            lo = mid
        else:
            hi = mid - 1
        frames.append(
            {"pred_h": pred.copy(), "lo": _one(lo, n), "hi": _one(hi, n), "mid": _one(mid, n)}
        )
    if not frames:
        frames.append(
            {"pred_h": pred.copy(), "lo": _one(0, n), "hi": _one(0, n), "mid": _one(0, n)}
        )
    return frames, {"return": _one(lo, n)}


def run_minimum(instance: GraphInstance):
    """Left-to-right scan for the smallest key.  One frame per inspected
    element; ``min_h`` tracks the running argmin, ``i`` the scan position.
    """
    keys = instance.node_inputs["key"]
    n = instance.n
    pred = _array_pred(n)
    best = 0
    frames = []
    for idx in range(1, n):
        if keys[idx] < keys[best]:
            best = idx
        frames.append({"pred_h": pred.copy(), "min_h": _one(best, n), "i": _one(idx, n)})
    if not frames:
        frames.append({"pred_h": pred.copy(), "min_h": _one(0, n), "i": _one(0, n)})
    return frames, {"min": _one(best, n)}
