"""Dense float64 tensors with reverse-mode automatic differentiation.

Every operation computes its result eagerly with numpy and, when any input
requires gradients, records a closure that routes the output gradient back
to the inputs. A backward pass walks the recorded graph once in reverse
topological order, accumulating into ``Tensor.grad``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

import numpy as np

from ..errors import ShapeError

Array = np.ndarray


class Tensor:
    """A node in the computation graph: float64 data plus optional gradient."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 3:
            raise ShapeError(f"tensors are limited to rank 3, got shape {arr.shape}")
        self.data = arr
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _node(data: Array, parents: tuple[Tensor, ...], backward: Callable[[Tensor], Callable[[], None]]) -> Tensor:
    """Wrap `data`; record `backward(out)` only if some parent needs gradients."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward(out)
    return out


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    """Reduce gradient `g` back to `shape` by summing broadcast axes."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum with numpy broadcasting (used for bias terms)."""
    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(_unbroadcast(out.grad, a.data.shape))
            if b.requires_grad:
                b.accumulate(_unbroadcast(out.grad, b.data.shape))
        return run
    return _node(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with broadcasting."""
    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(_unbroadcast(out.grad * b.data, a.data.shape))
            if b.requires_grad:
                b.accumulate(_unbroadcast(out.grad * a.data, b.data.shape))
        return run
    return _node(a.data * b.data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python constant."""
    c = float(c)

    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(out.grad * c)
        return run
    return _node(a.data * c, (a,), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product, a (m,k) @ b (k,n) -> (m,n)."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 tensors, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")

    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(out.grad @ b.data.T)
            if b.requires_grad:
                b.accumulate(a.data.T @ out.grad)
        return run
    return _node(a.data @ b.data, (a, b), backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(out.grad.reshape(a.data.shape))
        return run
    return _node(a.data.reshape(shape), (a,), backward)


def flip(a: Tensor, axis: int) -> Tensor:
    """Reverse along one axis; its own inverse."""
    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(np.flip(out.grad, axis=axis))
        return run
    return _node(np.flip(a.data, axis=axis), (a,), backward)


def concat(tensors: Iterable[Tensor], axis: int) -> Tensor:
    ts = tuple(tensors)
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward(out: Tensor):
        def run():
            pieces = np.split(out.grad, splits, axis=axis)
            for t, g in zip(ts, pieces):
                if t.requires_grad:
                    t.accumulate(g)
        return run
    return _node(np.concatenate([t.data for t in ts], axis=axis), ts, backward)


def sum_all(a: Tensor) -> Tensor:
    """Reduce to a scalar."""
    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(np.full_like(a.data, float(out.grad)))
        return run
    return _node(np.asarray(a.data.sum()), (a,), backward)


def mean_all(a: Tensor) -> Tensor:
    return scale(sum_all(a), 1.0 / a.size)


def relu(a: Tensor) -> Tensor:
    def backward(out: Tensor):
        mask = a.data > 0

        def run():
            if a.requires_grad:
                a.accumulate(out.grad * mask)
        return run
    return _node(np.maximum(a.data, 0.0), (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid(a.data)

    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(out.grad * y * (1.0 - y))
        return run
    return _node(y, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                a.accumulate(out.grad * (1.0 - y * y))
        return run
    return _node(y, (a,), backward)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, stabilised by max subtraction."""
    y = softmax_values(a.data)

    def backward(out: Tensor):
        def run():
            if a.requires_grad:
                inner = (out.grad * y).sum(axis=-1, keepdims=True)
                a.accumulate(y * (out.grad - inner))
        return run
    return _node(y, (a,), backward)


def log(a: Tensor, floor: float = 1e-12) -> Tensor:
    """Natural log with the argument clamped at `floor`."""
    clipped = np.maximum(a.data, floor)

    def backward(out: Tensor):
        mask = a.data > floor

        def run():
            if a.requires_grad:
                a.accumulate(out.grad * mask / clipped)
        return run
    return _node(np.log(clipped), (a,), backward)


def _sigmoid(x: Array) -> Array:
    # Split by sign so exp never overflows.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_values(x: Array) -> Array:
    """Plain-array softmax over the last axis (no graph recording)."""
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def topo_order(loss: Tensor) -> list[Tensor]:
    """Iterative post-order over the graph that feeds `loss`."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Run reverse-mode accumulation from a scalar loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    order = topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward()


class GradientTape:
    """Named parameter set for one training step.

    Wraps each array in a gradient-requiring Tensor; after `backward` every
    parameter has a gradient of its own shape, exactly zero if the forward
    pass never touched it.
    """

    def __init__(self, params: Mapping[str, Array]):
        self.tensors: dict[str, Tensor] = {
            name: Tensor(arr, requires_grad=True) for name, arr in params.items()
        }

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def backward(self, loss: Tensor) -> dict[str, Array]:
        backward(loss)
        return {
            name: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for name, t in self.tensors.items()
        }
