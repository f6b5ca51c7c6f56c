from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import NP_xxf8
from ..exceptions import InvalidAudio


def _as_values(
    values: object
) -> NP_xxf8:
    array = np.ascontiguousarray(values, dtype=np.float64)
    array.flags.writeable = False
    return array


@attrs.frozen(kw_only=True, eq=False)
class LogMelSpectrogram:
    values: NP_xxf8 = attrs.field(converter=_as_values)
    clip_id: str

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.values.ndim != 2:
            raise InvalidAudio(f"Spectrogram '{self.clip_id}' must be a frames x mels matrix")
        if not np.all(np.isfinite(self.values)):
            raise InvalidAudio(f"Spectrogram '{self.clip_id}' contains non-finite values")

    @property
    def n_frames(
        self: Self
    ) -> int:
        return int(self.values.shape[0])

    @property
    def n_mels(
        self: Self
    ) -> int:
        return int(self.values.shape[1])
