"""Minimal dense-tensor engine with reverse-mode differentiation.

A :class:`Tensor` wraps a float64 numpy array plus the recipe that
produced it (parent tensors and a vector-Jacobian closure).  Calling
:func:`backward` on a scalar walks the recorded graph once in reverse
topological order and accumulates gradients into every leaf that asked
for them.  All arithmetic is 64-bit and reductions run in numpy's
deterministic row-major order, so identical programs give bit-identical
results.

Non-differentiable corners use fixed subgradients: ``relu`` has slope 0
at 0, and ``max`` routes the gradient to the first attaining index.
Masked reductions accept ``-inf`` sentinels; rows keep at least one
finite entry, so ``max``/``logsumexp``/``softmax`` never emit NaN.
"""

from __future__ import annotations

import contextlib
import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

_GRAD_ENABLED = True

# Creation order doubles as a topological order of the recorded graph,
# so the backward pass can walk nodes highest-index-first.
_NODE_COUNTER = itertools.count(1)


@contextlib.contextmanager
def no_grad():
    """Run without recording the differentiation graph (evaluation mode)."""
    global _GRAD_ENABLED
    saved = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = saved


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp", "_g", "_idx")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None
        self._g: np.ndarray | None = None  # transient backward accumulator
        self._idx = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; every overload routes through the module primitives
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: tuple[Tensor, ...], vjp) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = (
        data
        if type(data) is np.ndarray and data.dtype == np.float64
        else np.asarray(data, dtype=np.float64)
    )
    out.grad = None
    out.requires_grad = False
    out._parents = ()
    out._vjp = None
    out._g = None
    out._idx = 0
    if _GRAD_ENABLED:
        for p in parents:
            if p.requires_grad:
                out.requires_grad = True
                out._parents = parents
                out._vjp = vjp
                out._idx = next(_NODE_COUNTER)
                break
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape == b.data.shape:
        vjp = lambda g: (g, g)  # noqa: E731 - hot path
    else:
        vjp = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))  # noqa: E731
    return _make(a.data + b.data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape == b.data.shape:
        vjp = lambda g: (g, -g)  # noqa: E731 - hot path
    else:
        vjp = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))  # noqa: E731
    return _make(a.data - b.data, (a, b), vjp)


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape == b.data.shape:
        vjp = lambda g: (g * b.data, g * a.data)  # noqa: E731 - hot path
    else:
        vjp = lambda g: (  # noqa: E731
            _unbroadcast(g * b.data, a.shape),
            _unbroadcast(g * a.data, b.shape),
        )
    return _make(a.data * b.data, (a, b), vjp)


def div(a: Tensor, b: Tensor) -> Tensor:
    return _make(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-d operands, got {a.shape} @ {b.shape}")
    return _make(
        a.data @ b.data,
        (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x @ weight (+ bias broadcast over rows), fused into one node."""
    if bias is None:
        return matmul(x, weight)
    if x.ndim != 2 or weight.ndim != 2:
        raise ValueError(f"linear expects 2-d operands, got {x.shape} @ {weight.shape}")

    def vjp(g):
        return (g @ weight.data.T, x.data.T @ g, g.sum(axis=0))

    return _make(x.data @ weight.data + bias.data, (x, weight, bias), vjp)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a: Tensor) -> Tensor:
    # evaluated piecewise to stay overflow-free on both tails
    out = np.empty_like(a.data)
    pos = a.data >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ex = np.exp(a.data[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def softplus(a: Tensor) -> Tensor:
    """log(1 + e^x), overflow-safe."""
    out = np.logaddexp(0.0, a.data)
    sig = np.empty_like(a.data)
    pos = a.data >= 0
    sig[pos] = 1.0 / (1.0 + np.exp(-a.data[pos]))
    ex = np.exp(a.data[~pos])
    sig[~pos] = ex / (1.0 + ex)
    return _make(out, (a,), lambda g: (g * sig,))


def concat(tensors: "list[Tensor]", axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate(datas, axis=axis), tuple(tensors), vjp)


def stack(tensors: "list[Tensor]", axis: int = 0) -> Tensor:
    def vjp(g):
        return tuple(np.take(g, k, axis=axis) for k in range(len(tensors)))

    return _make(np.stack([t.data for t in tensors], axis=axis), tuple(tensors), vjp)


def slice_tensor(a: Tensor, key) -> Tensor:
    """Basic slicing / integer indexing with scatter-back gradient."""

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, key, g)
        return (out,)

    return _make(a.data[key], (a,), vjp)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes=None) -> Tensor:
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def broadcast_to(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    return _make(
        np.broadcast_to(a.data, shape).copy(),
        (a,),
        lambda g: (_unbroadcast(g, a.shape),),
    )


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), vjp)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), Tensor(1.0 / count))


def max_(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """Max over one axis; ties route the gradient to the first argmax."""
    idx = np.argmax(a.data, axis=axis)
    out = np.take_along_axis(a.data, np.expand_dims(idx, axis), axis=axis)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, np.expand_dims(idx, axis), g, axis=axis)
        return (grad,)

    return _make(out if keepdims else np.squeeze(out, axis=axis), (a,), vjp)


def logsumexp(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """Overflow-safe log-sum-exp; -inf entries drop out of the sum."""
    shift = np.max(a.data, axis=axis, keepdims=True)
    exps = np.exp(a.data - shift)
    total = exps.sum(axis=axis, keepdims=True)
    out = shift + np.log(total)
    weights = exps / total

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * weights,)

    return _make(out if keepdims else np.squeeze(out, axis=axis), (a,), vjp)


def softmax(a: Tensor, axis: int) -> Tensor:
    shift = np.max(a.data, axis=axis, keepdims=True)
    exps = np.exp(a.data - shift)
    out = exps / exps.sum(axis=axis, keepdims=True)

    def vjp(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return _make(out, (a,), vjp)


def gather(a: Tensor, indices, axis: int = 0) -> Tensor:
    """Select rows (or slices along ``axis``) by an integer index array."""
    indices = np.asarray(indices)

    def vjp(g):
        out = np.zeros_like(a.data)
        if axis == 0:
            np.add.at(out, indices, g)
        else:
            moved = np.moveaxis(out, axis, 0)
            np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return (out,)

    return _make(np.take(a.data, indices, axis=axis), (a,), vjp)


def take_pairs(a: Tensor, rows, cols) -> Tensor:
    """a[rows[k], cols[k]] for paired index arrays (first two axes)."""
    rows = np.asarray(rows)
    cols = np.asarray(cols)

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, (rows, cols), g)
        return (out,)

    return _make(a.data[rows, cols], (a,), vjp)


def scatter(values: Tensor, indices, num_rows: int) -> Tensor:
    """Sum ``values`` rows into a fresh tensor of ``num_rows`` rows at
    ``indices`` (duplicate indices accumulate)."""
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= num_rows):
        raise IndexError("scatter index out of range")
    out = np.zeros((num_rows,) + values.shape[1:], dtype=np.float64)
    np.add.at(out, indices, values.data)
    return _make(out, (values,), lambda g: (g[indices],))


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every requires-grad
    leaf reachable from ``loss``; ``loss`` must be scalar.

    Nodes are visited in decreasing creation index.  Every consumer of a
    node was created after it, so each node's incoming gradient is fully
    accumulated before its own vjp runs.
    """
    if loss.data.shape != ():
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return
    one = np.ones((), dtype=np.float64)
    if loss._vjp is None:  # the loss is itself a leaf
        loss.grad = one if loss.grad is None else loss.grad + one
        return

    loss._g = one
    heap: list[tuple[int, int, Tensor]] = [(-loss._idx, id(loss), loss)]
    queued = {id(loss)}
    while heap:
        _, _, node = heapq.heappop(heap)
        queued.discard(id(node))
        g = node._g
        node._g = None
        for parent, pg in zip(node._parents, node._vjp(g)):
            if pg is None or not parent.requires_grad:
                continue
            if parent._vjp is None:
                parent.grad = pg if parent.grad is None else parent.grad + pg
            else:
                parent._g = pg if parent._g is None else parent._g + pg
                if id(parent) not in queued:
                    heapq.heappush(heap, (-parent._idx, id(parent), parent))
                    queued.add(id(parent))


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second-moment buffers keyed like the parameter dict."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def global_norm(grads: "dict[str, np.ndarray]") -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_gradients(grads: "dict[str, np.ndarray]", max_norm: float) -> "dict[str, np.ndarray]":
    """Scale all gradients jointly so their global norm is at most
    ``max_norm``."""
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def adam_step(
    params: "dict[str, Tensor]",
    grads: "dict[str, np.ndarray]",
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update with bias correction."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------


def gradcheck(
    fn, inputs: "list[Tensor]", step: float = 1e-5, floor: "float | None" = None
) -> float:
    """Max relative error between reverse-mode and central-difference
    gradients of a scalar function of ``inputs``.

    The error for each element is |analytic - numeric| divided by
    max(|analytic|, |numeric|, floor); the absolute floor keeps roundoff
    from inflating the ratio where the true gradient is essentially
    zero.  By default the floor adapts to the gradient's own scale
    (one thousandth of its root-mean-square magnitude, at least 1e-6):
    central differences of a large composite graph carry cancellation
    noise proportional to the function value, so coordinates far below
    the typical gradient magnitude can only be compared in absolute
    terms.
    """
    for t in inputs:
        t.requires_grad = True
        t.zero_grad()
    out = fn(*inputs)
    backward(out)
    analytic = [
        np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs
    ]
    if floor is None:
        total = sum(float(np.sum(a * a)) for a in analytic)
        count = sum(a.size for a in analytic)
        rms = np.sqrt(total / count) if count else 0.0
        floor = max(1e-6, 1e-3 * rms)

    worst = 0.0
    for t, ana in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + step
            with no_grad():
                hi = float(fn(*inputs).data)
            flat[k] = saved - step
            with no_grad():
                lo = float(fn(*inputs).data)
            flat[k] = saved
            numeric = (hi - lo) / (2.0 * step)
            a = float(ana.reshape(-1)[k])
            denom = max(abs(a), abs(numeric), floor)
            worst = max(worst, abs(a - numeric) / denom)
    return worst
