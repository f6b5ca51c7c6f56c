from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xf8
)
from ..exceptions import EmptyPrototype


def _readonly_vector(
    value: NP_xf8
) -> NP_xf8:
    vector = np.array(value, dtype=np.float64)
    vector.flags.writeable = False
    return vector


@attrs.frozen(kw_only=True, eq=False)
class Prototype:
    class_id: ClassIdType
    vector: NP_xf8 = attrs.field(converter=_readonly_vector)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        assert self.vector.ndim == 1 and np.all(np.isfinite(self.vector))
        if not np.any(self.vector):
            raise EmptyPrototype(self.class_id)
