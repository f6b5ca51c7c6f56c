from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xxf8
)
from ..exceptions import (
    DuplicateClass,
    ZeroVector
)


def _readonly_matrix(
    value: NP_xxf8
) -> NP_xxf8:
    matrix = np.array(value, dtype=np.float64)
    matrix.flags.writeable = False
    return matrix


@attrs.frozen(kw_only=True, eq=False)
class StochasticClassifierState:
    """
    Per-class mean and spread of the cosine classifier weights.

    Column `j` of `mu` and `sigma` belongs to `class_ids[j]`. Columns are
    grouped by session; `session_boundaries[m]` is the first column of
    session `m`.
    """

    mu: NP_xxf8 = attrs.field(converter=_readonly_matrix)
    sigma: NP_xxf8 = attrs.field(converter=_readonly_matrix)
    class_ids: tuple[ClassIdType, ...] = attrs.field(converter=lambda ids: tuple(int(i) for i in ids))
    session_boundaries: tuple[int, ...] = attrs.field(converter=lambda offsets: tuple(int(o) for o in offsets))

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert self.mu.ndim == 2 and self.mu.shape == self.sigma.shape
        assert self.mu.shape[1] == len(self.class_ids)
        assert np.all(self.sigma >= 0.0)
        assert np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.sigma))
        assert list(self.session_boundaries) == sorted(set(self.session_boundaries))
        assert all(0 <= offset < max(self.n_classes, 1) for offset in self.session_boundaries)
        if len(set(self.class_ids)) != len(self.class_ids):
            duplicate = next(class_id for class_id in self.class_ids if self.class_ids.count(class_id) > 1)
            raise DuplicateClass(duplicate)
        if self.n_classes and np.any(np.linalg.norm(self.mu, axis=0) == 0.0):
            raise ZeroVector("Classifier mean has a zero column")

    @property
    def dim(
        self: Self
    ) -> int:
        return self.mu.shape[0]

    @property
    def n_classes(
        self: Self
    ) -> int:
        return len(self.class_ids)

    @property
    def n_sessions(
        self: Self
    ) -> int:
        return len(self.session_boundaries)
