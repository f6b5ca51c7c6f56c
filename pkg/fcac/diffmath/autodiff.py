from __future__ import annotations


from typing import (
    Callable,
    Mapping,
    Never,
    Self
)

import attrs
import numpy as np

from ..constants.custom_typing import ShapeType
from ..exceptions import (
    NonScalarRoot,
    ShapeMismatch
)
from .tensor import Tensor


class Autodiff:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def forward(
        cls: type[Self],
        graph: Graph,
        inputs: Mapping[str, np.ndarray]
    ) -> GraphEvaluation:
        return graph.forward(inputs)

    @classmethod
    def _topological_order(
        cls: type[Self],
        root: Tensor
    ) -> list[Tensor]:
        # Iterative post-order DFS; deep networks would overflow the recursion limit.
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            stack.extend(
                (parent, False)
                for parent in reversed(node._parents)
                if parent._requires_grad and id(parent) not in visited
            )
        return order

    @classmethod
    def backward(
        cls: type[Self],
        root: Tensor
    ) -> dict[Tensor, np.ndarray]:
        """
        Reverse sweep from a scalar root.

        Returns the adjoint of every leaf tensor that requires a gradient and
        is reachable from the root.
        """
        if root.data.size != 1:
            raise NonScalarRoot(f"Backward root {root.op_id} has shape {root.shape}, expected a scalar")
        adjoints: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
        leaf_grads: dict[Tensor, np.ndarray] = {}
        for node in reversed(cls._topological_order(root)):
            adjoint = adjoints.pop(id(node), None)
            if adjoint is None:
                continue
            if node._backward is None:
                if node._requires_grad:
                    leaf_grads[node] = adjoint
                continue
            for parent, parent_grad in zip(node._parents, node._backward(adjoint), strict=True):
                if parent_grad is None or not parent._requires_grad:
                    continue
                if (existing := adjoints.get(id(parent))) is None:
                    adjoints[id(parent)] = np.array(parent_grad, dtype=np.float64)
                else:
                    adjoints[id(parent)] = existing + parent_grad
        return leaf_grads

    @classmethod
    def finite_difference_gradient(
        cls: type[Self],
        function: Callable[[Mapping[str, np.ndarray]], float],
        params: Mapping[str, np.ndarray],
        eps: float = 1e-5
    ) -> dict[str, np.ndarray]:
        assert eps > 0.0
        base = {name: np.array(value, dtype=np.float64) for name, value in params.items()}
        grads: dict[str, np.ndarray] = {}
        for name, value in base.items():
            grad = np.zeros_like(value)
            for index in np.ndindex(value.shape):
                original = value[index]
                value[index] = original + eps
                plus = float(function(base))
                value[index] = original - eps
                minus = float(function(base))
                value[index] = original
                grad[index] = (plus - minus) / (2.0 * eps)
            grads[name] = grad
        return grads

    @classmethod
    def relative_error(
        cls: type[Self],
        a: np.ndarray,
        b: np.ndarray,
        atol: float = 1e-7
    ) -> float:
        # Norm of the difference relative to the larger gradient norm; differences within `atol` count as zero.
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        gap = float(np.linalg.norm(a - b))
        if gap <= atol:
            return 0.0
        return gap / max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))

    @classmethod
    def gradient_check(
        cls: type[Self],
        function: Callable[[Mapping[str, Tensor]], Tensor],
        params: Mapping[str, np.ndarray],
        eps: float = 1e-5
    ) -> float:
        """
        Largest relative error between `backward` and central differences,
        taken per parameter.
        """
        graph = Graph(
            function=function,
            input_shapes={name: np.shape(value) for name, value in params.items()}
        )
        analytic = graph.forward(params).backward()
        numeric = cls.finite_difference_gradient(
            lambda values: graph.forward(values).value,
            params,
            eps
        )
        return max(
            (cls.relative_error(analytic[name], numeric[name]) for name in params),
            default=0.0
        )


@attrs.frozen(kw_only=True)
class Graph:
    """
    A declared computation over named inputs.

    `function` receives one gradient-tracking `Tensor` per declared input and
    must build its result from tensor operations.
    """

    function: Callable[[Mapping[str, Tensor]], Tensor]
    input_shapes: Mapping[str, ShapeType]

    def forward(
        self: Self,
        inputs: Mapping[str, np.ndarray]
    ) -> GraphEvaluation:
        if set(inputs) != set(self.input_shapes):
            raise ShapeMismatch(
                "graph#inputs",
                f"expected inputs {sorted(self.input_shapes)}, got {sorted(inputs)}"
            )
        leaves: dict[str, Tensor] = {}
        for name, shape in self.input_shapes.items():
            value = np.array(inputs[name], dtype=np.float64)
            if value.shape != tuple(shape):
                raise ShapeMismatch(f"graph#{name}", f"input '{name}' has shape {value.shape}, declared {tuple(shape)}")
            leaves[name] = Tensor(value, requires_grad=True)
        return GraphEvaluation(
            root=self.function(leaves),
            leaves=leaves
        )


@attrs.frozen(kw_only=True, eq=False)
class GraphEvaluation:
    root: Tensor
    leaves: Mapping[str, Tensor]

    @property
    def value(
        self: Self
    ) -> float:
        return self.root.item()

    def backward(
        self: Self
    ) -> dict[str, np.ndarray]:
        # Inputs the root does not depend on receive zero gradients.
        leaf_grads = Autodiff.backward(self.root)
        return {
            name: leaf_grads.get(leaf, np.zeros_like(leaf.data))
            for name, leaf in self.leaves.items()
        }
