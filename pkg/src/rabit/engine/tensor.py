import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from rabit.engine import profiler
from rabit.errors import ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Tensor:
    """
    Dense float array that takes part in reverse-mode differentiation.

    Tensors produced by ops keep references to their inputs and a closure mapping
    the output gradient to one gradient per input. Leaves collect `grad`.
    """

    def __init__(self, data: Any, requires_grad: bool = False, dtype: Optional[Any] = None) -> None:
        array = np.asarray(data, dtype=dtype)
        if array.dtype.kind != "f":
            array = array.astype(np.float64)

        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.op = "leaf"
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], op: str, backward: BackwardFn) -> "Tensor":
        out = Tensor(data)
        out.op = op
        profiler.record_elements(op, out.data.size)

        if is_grad_enabled() and any(parent.requires_grad for parent in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward

        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.data.size != 1:
            msg = "Only single-element tensors convert to a Python scalar, got shape %s."
            raise ShapeError(msg % (self.shape,))
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        return "Tensor(shape=%s, dtype=%s, op=%s)" % (self.shape, self.dtype, self.op)

    def __add__(self, other: Any) -> "Tensor":
        from rabit.engine import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Tensor":
        from rabit.engine import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from rabit.engine import ops

        if np.isscalar(other):
            return ops.sub_from_scalar(float(other), self)
        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from rabit.engine import ops

        if np.isscalar(other):
            return ops.scalar_mul(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Tensor":
        from rabit.engine import ops

        if np.isscalar(other):
            return ops.scalar_mul(self, 1.0 / float(other))
        return ops.div(self, other)

    def __neg__(self) -> "Tensor":
        from rabit.engine import ops

        return ops.neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        from rabit.engine import ops

        return ops.pow_scalar(self, exponent)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from rabit.engine import ops

        return ops.matmul(self, other)


def topological_order(root: Tensor) -> List[Tensor]:
    """Inputs before consumers; every reachable tensor appears once."""
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]

    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue

        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))

    return order


def backward(loss: Tensor) -> None:
    if loss.size != 1:
        msg = "backward() needs a scalar loss, got shape %s."
        raise ShapeError(msg % (loss.shape,))

    order = topological_order(loss)
    pending = {id(loss): np.ones_like(loss.data)}

    for node in reversed(order):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue

        if node._backward is None:
            if node.requires_grad:
                grad = np.asarray(grad, dtype=node.data.dtype).reshape(node.shape)
                node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue

        for parent, parent_grad in zip(node._parents, node._backward(grad)):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = parent_grad if key not in pending else pending[key] + parent_grad


@dataclass(frozen=True)
class Node:
    id: int
    op: str
    inputs: Tuple[int, ...]


class Graph:
    """Read-only, topologically ordered view of the ops behind a tensor."""

    def __init__(self, nodes: List[Node]) -> None:
        self.nodes = nodes

    @classmethod
    def trace(cls, output: Tensor) -> "Graph":
        order = topological_order(output)
        ids = {id(tensor): position for position, tensor in enumerate(order)}
        nodes = [
            Node(id=ids[id(tensor)], op=tensor.op, inputs=tuple(ids[id(parent)] for parent in tensor._parents))
            for tensor in order
        ]
        return cls(nodes)

    def op_counts(self) -> Counter:
        return Counter(node.op for node in self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)
