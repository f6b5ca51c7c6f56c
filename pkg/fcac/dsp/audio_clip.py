from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import NP_xf8
from ..exceptions import InvalidAudio


def _as_samples(
    samples: object
) -> NP_xf8:
    array = np.ascontiguousarray(samples, dtype=np.float64)
    array.flags.writeable = False
    return array


@attrs.frozen(kw_only=True, eq=False)
class AudioClip:
    samples: NP_xf8 = attrs.field(converter=_as_samples)
    sample_rate: int
    clip_id: str
    label: int | None = None

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.sample_rate <= 0:
            raise InvalidAudio(f"Clip '{self.clip_id}' has non-positive sample rate {self.sample_rate}")
        if self.samples.ndim != 1 or not self.samples.size:
            raise InvalidAudio(f"Clip '{self.clip_id}' must be a non-empty mono sample sequence")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidAudio(f"Clip '{self.clip_id}' contains non-finite samples")
        if np.any(np.abs(self.samples) > 1.0):
            raise InvalidAudio(f"Clip '{self.clip_id}' has samples outside [-1, 1]")

    @property
    def n_samples(
        self: Self
    ) -> int:
        return int(self.samples.size)

    @property
    def duration(
        self: Self
    ) -> float:
        return self.n_samples / self.sample_rate
