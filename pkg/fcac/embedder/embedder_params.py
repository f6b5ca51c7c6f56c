from __future__ import annotations


from typing import (
    Mapping,
    Self
)

import attrs
import numpy as np

from ..exceptions import (
    FrozenParameters,
    ShapeMismatch
)
from .embedder_config import EmbedderConfig


def _readonly_tensors(
    tensors: Mapping[str, np.ndarray]
) -> dict[str, np.ndarray]:
    result: dict[str, np.ndarray] = {}
    for name in sorted(tensors):
        array = np.array(tensors[name], dtype=np.float64)
        array.flags.writeable = False
        result[name] = array
    return result


@attrs.frozen(kw_only=True, eq=False)
class EmbedderParams:
    """
    Named backbone and projection-head tensors.

    Arrays are always read-only; updates build a new instance. Once `frozen`
    is set, `updated` refuses to build one.
    """

    config: EmbedderConfig
    tensors: Mapping[str, np.ndarray] = attrs.field(converter=_readonly_tensors)
    frozen: bool = False

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert all(np.all(np.isfinite(tensor)) for tensor in self.tensors.values())

    def updated(
        self: Self,
        tensors: Mapping[str, np.ndarray]
    ) -> EmbedderParams:
        if self.frozen:
            raise FrozenParameters("Backbone parameters are frozen")
        merged = dict(self.tensors)
        for name, value in tensors.items():
            if name not in merged or merged[name].shape != np.shape(value):
                raise ShapeMismatch(f"params#{name}", f"no parameter '{name}' of shape {np.shape(value)}")
            merged[name] = value
        return attrs.evolve(self, tensors=merged)

    def freeze(
        self: Self
    ) -> EmbedderParams:
        return attrs.evolve(self, frozen=True)

    def projection_names(
        self: Self
    ) -> list[str]:
        return [name for name in self.tensors if name.startswith("projection.")]
