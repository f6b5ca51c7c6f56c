from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import NP_xi8
from ..diffmath.tensor import Tensor
from ..exceptions import (
    BatchTooSmall,
    NoPositives
)


@attrs.frozen(kw_only=True, eq=False)
class LabeledBatch:
    """
    Unit-norm rows with integer labels.

    For anchor `a`, the contrast set is every other row and the positives are
    the other rows sharing its label.
    """

    vectors: Tensor = attrs.field(converter=Tensor._wrap)
    labels: NP_xi8 = attrs.field(converter=lambda labels: np.asarray(labels, dtype=np.int64))

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert self.vectors.ndim == 2 and self.labels.shape == (self.vectors.shape[0],)
        assert np.allclose(np.linalg.norm(self.vectors.data, axis=1), 1.0, rtol=0.0, atol=1e-9)

    @property
    def size(
        self: Self
    ) -> int:
        return len(self.labels)

    def positive_mask(
        self: Self
    ) -> np.ndarray:
        mask = self.labels[:, None] == self.labels[None, :]
        np.fill_diagonal(mask, False)
        return mask

    def validate_contrastive(
        self: Self
    ) -> None:
        if self.size < 2:
            raise BatchTooSmall(f"Contrastive batch needs at least 2 samples, got {self.size}")
        counts = self.positive_mask().sum(axis=1)
        if (empty := np.flatnonzero(counts == 0)).size:
            raise NoPositives(int(empty[0]))
