"""
Tensors with reverse-mode gradients.

A Tensor wraps a float64 numpy array. Tensors produced by an operation record
their parents and a backward closure mapping the output gradient to one
gradient per parent. `backward(loss)` walks the recorded graph once in a
fixed topological order and accumulates into Parameter.grad.
"""

from collections import OrderedDict
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import GraphStateError, NonFiniteError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Immutable f64 value, optionally attached to a recorded graph."""

    __slots__ = ("data", "parents", "_backward", "requires_grad", "op", "_consumed")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        self.parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self.requires_grad = requires_grad
        self.op = "leaf"
        self._consumed = False

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        """Result of operation `op`; NaN or Inf in `data` raises NonFiniteError."""
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(op)
        out = cls(data)
        out.op = op
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.parents = tuple(parents)
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
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op})"

    def __add__(self, other):
        from .ops import add

        return add(self, other)

    def __radd__(self, other):
        from .ops import add

        return add(other, self)

    def __sub__(self, other):
        from .ops import sub

        return sub(self, other)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    def __rmul__(self, other):
        from .ops import mul

        return mul(other, self)

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    def __neg__(self):
        from .ops import scale

        return scale(self, -1.0)


class Parameter(Tensor):
    """Named learnable leaf; `grad` is None until zeroed or populated."""

    __slots__ = ("name", "grad")

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.grad: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.shape})"

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def assign(self, value: np.ndarray) -> None:
        """Replace the value (optimizer steps, checkpoint loads); shape must match."""
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.data.shape:
            raise ShapeError(f"{self.name}: cannot assign shape {value.shape} to {self.data.shape}")
        self.data = np.ascontiguousarray(value.copy())


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


class ParameterSet:
    """Ordered name -> Parameter mapping (insertion order is the canonical order)."""

    def __init__(self, params: Iterable[Parameter] = ()):
        self._params: "OrderedDict[str, Parameter]" = OrderedDict()
        for p in params:
            self.add(p)

    def add(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise ValueError(f"duplicate parameter name {param.name}")
        self._params[param.name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def remove_prefix(self, prefix: str) -> None:
        for name in [n for n in self._params if n.startswith(prefix)]:
            del self._params[name]

    def with_prefix(self, prefix: str) -> List[Parameter]:
        return [p for n, p in self._params.items() if n.startswith(prefix)]

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def arrays(self) -> Dict[str, np.ndarray]:
        """Copies of every value, keyed by name."""
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_arrays(self, arrays: Dict[str, np.ndarray], strict: bool = True) -> None:
        """Assign values by name.

        Raises:
            ShapeError: a shape differs (message names both shapes).
            KeyError: strict and a parameter has no stored value.
        """
        for name, p in self._params.items():
            if name not in arrays:
                if strict:
                    raise KeyError(f"missing parameter {name}")
                continue
            p.assign(arrays[name])

    def count(self) -> int:
        return sum(p.size for p in self._params.values())


def _topological_order(root: Tensor) -> List[Tensor]:
    """Post-order DFS over parents (iterative, parents visited in recorded order)."""
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        if i == 0:
            if id(node) in visited:
                continue
            visited.add(id(node))
        if i < len(node.parents):
            stack.append((node, i + 1))
            parent = node.parents[i]
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, 0))
        else:
            order.append(node)
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into every reachable Parameter.grad.

    The graph is consumed: intermediate closures are released, and a second
    call on the same loss raises GraphStateError.
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._consumed:
        raise GraphStateError("backward called twice on the same graph; run forward again")
    if loss._backward is None:
        raise GraphStateError("backward called before a forward pass recorded a graph")

    order = _topological_order(loss)
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        if node._backward is None:
            continue
        parent_grads = node._backward(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
        node._backward = None
        node.parents = ()
    loss._consumed = True
