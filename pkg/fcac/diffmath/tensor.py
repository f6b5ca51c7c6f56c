from __future__ import annotations


import itertools
from typing import (
    Callable,
    ClassVar,
    Iterable,
    Self
)

import numpy as np

from ..constants.custom_typing import ShapeType
from ..exceptions import (
    NonFiniteValue,
    ShapeMismatch
)


type BackwardType = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


def _unbroadcast(
    grad: np.ndarray,
    shape: ShapeType
) -> np.ndarray:
    # Sum out the axes that broadcasting added or stretched.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, length in enumerate(shape):
        if length == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _normalize_axes(
    axis: int | tuple[int, ...] | None,
    ndim: int
) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


class Tensor:
    """
    A dense float64 array participating in reverse-mode differentiation.

    Operations evaluate eagerly and record a node (op id, parents, backward
    closure) whenever some input requires a gradient. `Autodiff.backward`
    sweeps the recorded graph from a scalar root.
    """

    __slots__ = (
        "_data",
        "_requires_grad",
        "_op_id",
        "_parents",
        "_backward"
    )

    _node_counter: ClassVar[itertools.count] = itertools.count()

    def __init__(
        self: Self,
        data: np.ndarray | float,
        *,
        requires_grad: bool = False
    ) -> None:
        super().__init__()
        self._data: np.ndarray = np.array(data, dtype=np.float64)
        self._requires_grad: bool = requires_grad
        self._op_id: str = f"leaf#{next(type(self)._node_counter)}"
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardType | None = None

    def __repr__(
        self: Self
    ) -> str:
        return f"Tensor({self._op_id}, shape={self.shape})"

    @classmethod
    def _next_op_id(
        cls: type[Self],
        op: str
    ) -> str:
        return f"{op}#{next(cls._node_counter)}"

    @classmethod
    def _make(
        cls: type[Self],
        op_id: str,
        data: np.ndarray,
        parents: tuple[Tensor, ...],
        backward: BackwardType
    ) -> Tensor:
        if not np.all(np.isfinite(data)):
            raise NonFiniteValue(op_id)
        result = Tensor.__new__(Tensor)
        result._data = data
        result._op_id = op_id
        result._requires_grad = any(parent._requires_grad for parent in parents)
        if result._requires_grad:
            result._parents = parents
            result._backward = backward
        else:
            result._parents = ()
            result._backward = None
        return result

    @classmethod
    def _wrap(
        cls: type[Self],
        value: Tensor | np.ndarray | float
    ) -> Tensor:
        return value if isinstance(value, Tensor) else Tensor(value)

    @property
    def data(
        self: Self
    ) -> np.ndarray:
        return self._data

    @property
    def shape(
        self: Self
    ) -> ShapeType:
        return self._data.shape

    @property
    def ndim(
        self: Self
    ) -> int:
        return self._data.ndim

    @property
    def requires_grad(
        self: Self
    ) -> bool:
        return self._requires_grad

    @property
    def op_id(
        self: Self
    ) -> str:
        return self._op_id

    def item(
        self: Self
    ) -> float:
        return float(self._data.reshape(-1)[0])

    # Elementwise binary operations broadcast numpy-style.

    def _binary(
        self: Self,
        other: Tensor | np.ndarray | float,
        op: str,
        forward: Callable[[np.ndarray, np.ndarray], np.ndarray],
        backward: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    ) -> Tensor:
        other = Tensor._wrap(other)
        op_id = Tensor._next_op_id(op)
        a = self._data
        b = other._data
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeMismatch(op_id, f"cannot broadcast {a.shape} with {b.shape}") from None
        out = forward(a, b)

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray, np.ndarray]:
            grad_a, grad_b = backward(grad, a, b, out)
            return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

        return Tensor._make(op_id, out, (self, other), backward_fn)

    def __add__(
        self: Self,
        other: Tensor | np.ndarray | float
    ) -> Tensor:
        return self._binary(other, "add", np.add, lambda g, a, b, out: (g, g))

    def __radd__(
        self: Self,
        other: np.ndarray | float
    ) -> Tensor:
        return Tensor._wrap(other) + self

    def __sub__(
        self: Self,
        other: Tensor | np.ndarray | float
    ) -> Tensor:
        return self._binary(other, "sub", np.subtract, lambda g, a, b, out: (g, -g))

    def __rsub__(
        self: Self,
        other: np.ndarray | float
    ) -> Tensor:
        return Tensor._wrap(other) - self

    def __mul__(
        self: Self,
        other: Tensor | np.ndarray | float
    ) -> Tensor:
        return self._binary(other, "mul", np.multiply, lambda g, a, b, out: (g * b, g * a))

    def __rmul__(
        self: Self,
        other: np.ndarray | float
    ) -> Tensor:
        return Tensor._wrap(other) * self

    def __truediv__(
        self: Self,
        other: Tensor | np.ndarray | float
    ) -> Tensor:
        return self._binary(other, "div", np.divide, lambda g, a, b, out: (g / b, -g * out / b))

    def __rtruediv__(
        self: Self,
        other: np.ndarray | float
    ) -> Tensor:
        return Tensor._wrap(other) / self

    def __neg__(
        self: Self
    ) -> Tensor:
        op_id = Tensor._next_op_id("neg")
        return Tensor._make(op_id, -self._data, (self,), lambda g: (-g,))

    def __matmul__(
        self: Self,
        other: Tensor | np.ndarray
    ) -> Tensor:
        other = Tensor._wrap(other)
        op_id = Tensor._next_op_id("matmul")
        a = self._data
        b = other._data
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatch(op_id, f"cannot multiply {a.shape} by {b.shape}")
        return Tensor._make(op_id, a @ b, (self, other), lambda g: (g @ b.T, a.T @ g))

    def __getitem__(
        self: Self,
        index: object
    ) -> Tensor:
        op_id = Tensor._next_op_id("getitem")
        x = self._data
        out = np.array(x[index])

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray]:
            result = np.zeros_like(x)
            np.add.at(result, index, grad)
            return (result,)

        return Tensor._make(op_id, out, (self,), backward_fn)

    # Unary elementwise operations.

    def exp(
        self: Self
    ) -> Tensor:
        op_id = Tensor._next_op_id("exp")
        out = np.exp(self._data)
        return Tensor._make(op_id, out, (self,), lambda g: (g * out,))

    def log(
        self: Self
    ) -> Tensor:
        op_id = Tensor._next_op_id("log")
        x = self._data
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(x)
        return Tensor._make(op_id, out, (self,), lambda g: (g / x,))

    def sqrt(
        self: Self
    ) -> Tensor:
        op_id = Tensor._next_op_id("sqrt")
        with np.errstate(invalid="ignore"):
            out = np.sqrt(self._data)
        return Tensor._make(op_id, out, (self,), lambda g: (g / (2.0 * out),))

    def relu(
        self: Self
    ) -> Tensor:
        # Subgradient at zero is zero.
        op_id = Tensor._next_op_id("relu")
        mask = self._data > 0.0
        return Tensor._make(op_id, np.where(mask, self._data, 0.0), (self,), lambda g: (g * mask,))

    # Shape operations.

    def reshape(
        self: Self,
        *shape: int
    ) -> Tensor:
        op_id = Tensor._next_op_id("reshape")
        original = self.shape
        try:
            out = self._data.reshape(shape)
        except ValueError:
            raise ShapeMismatch(op_id, f"cannot reshape {original} to {shape}") from None
        return Tensor._make(op_id, out, (self,), lambda g: (g.reshape(original),))

    def transpose(
        self: Self,
        *axes: int
    ) -> Tensor:
        op_id = Tensor._next_op_id("transpose")
        axes_tuple = axes or tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes_tuple))
        return Tensor._make(op_id, np.transpose(self._data, axes_tuple), (self,), lambda g: (np.transpose(g, inverse),))

    @property
    def T(
        self: Self
    ) -> Tensor:
        return self.transpose()

    def broadcast_to(
        self: Self,
        shape: ShapeType
    ) -> Tensor:
        op_id = Tensor._next_op_id("broadcast")
        original = self.shape
        try:
            out = np.array(np.broadcast_to(self._data, shape))
        except ValueError:
            raise ShapeMismatch(op_id, f"cannot broadcast {original} to {shape}") from None
        return Tensor._make(op_id, out, (self,), lambda g: (_unbroadcast(g, original),))

    @classmethod
    def concat(
        cls: type[Self],
        tensors: Iterable[Tensor],
        axis: int = 0
    ) -> Tensor:
        tensors = tuple(tensors)
        op_id = Tensor._next_op_id("concat")
        try:
            out = np.concatenate([tensor._data for tensor in tensors], axis=axis)
        except ValueError:
            raise ShapeMismatch(op_id, f"cannot concatenate {[tensor.shape for tensor in tensors]}") from None
        split_points = np.cumsum([tensor.shape[axis] for tensor in tensors])[:-1]

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray, ...]:
            return tuple(np.split(grad, split_points, axis=axis))

        return Tensor._make(op_id, out, tensors, backward_fn)

    # Reductions.

    def sum(
        self: Self,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False
    ) -> Tensor:
        op_id = Tensor._next_op_id("sum")
        original = self.shape
        axes = _normalize_axes(axis, self.ndim)

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray]:
            if not keepdims:
                grad = np.expand_dims(grad, axes)
            return (np.broadcast_to(grad, original).copy(),)

        return Tensor._make(op_id, np.array(self._data.sum(axis=axes, keepdims=keepdims)), (self,), backward_fn)

    def mean(
        self: Self,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False
    ) -> Tensor:
        axes = _normalize_axes(axis, self.ndim)
        count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axes, keepdims=keepdims) * (1.0 / count)

    def max(
        self: Self,
        axis: int
    ) -> tuple[Tensor, np.ndarray]:
        # Gradient flows only to the selected (first maximal) entry.
        op_id = Tensor._next_op_id("max")
        x = self._data
        indices = np.argmax(x, axis=axis)
        out = np.take_along_axis(x, np.expand_dims(indices, axis), axis=axis).squeeze(axis)

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray]:
            result = np.zeros_like(x)
            np.put_along_axis(result, np.expand_dims(indices, axis), np.expand_dims(grad, axis), axis=axis)
            return (result,)

        return Tensor._make(op_id, out, (self,), backward_fn), indices

    def norm(
        self: Self,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False
    ) -> Tensor:
        op_id = Tensor._next_op_id("norm")
        x = self._data
        axes = _normalize_axes(axis, self.ndim)
        norm_kept = np.sqrt(np.sum(x * x, axis=axes, keepdims=True))
        out = norm_kept if keepdims else np.array(norm_kept.squeeze(axis=axes))

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray]:
            if not keepdims:
                grad = np.expand_dims(grad, axes)
            safe_norm = np.where(norm_kept > 0.0, norm_kept, 1.0)
            return (np.where(norm_kept > 0.0, grad * x / safe_norm, 0.0),)

        return Tensor._make(op_id, out, (self,), backward_fn)

    def dot(
        self: Self,
        other: Tensor | np.ndarray
    ) -> Tensor:
        other = Tensor._wrap(other)
        op_id = Tensor._next_op_id("dot")
        a = self._data
        b = other._data
        if a.ndim != 1 or a.shape != b.shape:
            raise ShapeMismatch(op_id, f"dot needs equal-length vectors, got {a.shape} and {b.shape}")
        return Tensor._make(op_id, np.array(a @ b), (self, other), lambda g: (g * b, g * a))

    # Composites.

    def log_sum_exp(
        self: Self,
        axis: int,
        keepdims: bool = False
    ) -> Tensor:
        # The shift is a constant, so it cancels in the gradient.
        shift = np.max(self._data, axis=axis, keepdims=True)
        shifted = (self - shift).exp().sum(axis=axis, keepdims=True).log() + shift
        return shifted if keepdims else shifted.reshape(*np.squeeze(shifted.data, axis=axis).shape)

    def normalize(
        self: Self,
        axis: int = -1
    ) -> Tensor:
        return self / self.norm(axis=axis, keepdims=True)

    def conv2d(
        self: Self,
        kernel: Tensor | np.ndarray,
        stride: int = 1,
        padding: int = 0
    ) -> Tensor:
        """
        Cross-correlation of `(N, C, H, W)` input with `(O, C, kh, kw)` kernels,
        zero padding on both spatial sides.
        """
        kernel = Tensor._wrap(kernel)
        op_id = Tensor._next_op_id("conv2d")
        x = self._data
        k = kernel._data
        if x.ndim != 4 or k.ndim != 4 or x.shape[1] != k.shape[1]:
            raise ShapeMismatch(op_id, f"cannot convolve {x.shape} with kernel {k.shape}")
        _, _, height, width = x.shape
        _, _, kernel_h, kernel_w = k.shape
        padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        if padded.shape[2] < kernel_h or padded.shape[3] < kernel_w:
            raise ShapeMismatch(op_id, f"kernel {k.shape} larger than padded input {padded.shape}")
        windows = np.lib.stride_tricks.sliding_window_view(padded, (kernel_h, kernel_w), axis=(2, 3))
        windows = windows[:, :, ::stride, ::stride]
        out = np.einsum("nchwij,ocij->nohw", windows, k, optimize=True)
        out_h, out_w = out.shape[2:]

        def backward_fn(
            grad: np.ndarray
        ) -> tuple[np.ndarray, np.ndarray]:
            grad_kernel = np.einsum("nchwij,nohw->ocij", windows, grad, optimize=True)
            grad_padded = np.zeros_like(padded)
            for i in range(kernel_h):
                for j in range(kernel_w):
                    grad_padded[
                        :,
                        :,
                        i:i + stride * (out_h - 1) + 1:stride,
                        j:j + stride * (out_w - 1) + 1:stride
                    ] += np.einsum("nohw,oc->nchw", grad, k[:, :, i, j], optimize=True)
            return grad_padded[:, :, padding:padding + height, padding:padding + width], grad_kernel

        return Tensor._make(op_id, out, (self, kernel), backward_fn)
