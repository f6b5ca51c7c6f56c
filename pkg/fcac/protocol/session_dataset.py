from __future__ import annotations


from typing import Self

import attrs
import numpy as np

from ..constants.custom_typing import (
    ClassIdType,
    NP_xi8
)
from ..datagen.dataset_manifest import ManifestEntry
from ..dsp.log_mel_spectrogram import LogMelSpectrogram


@attrs.frozen(kw_only=True, eq=False)
class LabeledSample:
    spectrogram: LogMelSpectrogram
    class_id: ClassIdType


@attrs.frozen(kw_only=True)
class SessionDataset:
    """
    Class set and clip sources of one session.

    `train` and `eval` list manifest entries; features are materialized
    through a `SessionStore`, which owns the access rules.
    """

    session_index: int
    class_ids: tuple[ClassIdType, ...] = attrs.field(converter=lambda ids: tuple(sorted(int(i) for i in ids)))
    train: tuple[ManifestEntry, ...] = attrs.field(converter=tuple)
    eval: tuple[ManifestEntry, ...] = attrs.field(converter=tuple)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        classes = set(self.class_ids)
        assert all(entry.class_id in classes for entry in self.train)
        assert all(entry.class_id in classes for entry in self.eval)
        assert classes == {entry.class_id for entry in self.eval}

    def train_of(
        self: Self,
        class_id: ClassIdType
    ) -> list[ManifestEntry]:
        return [entry for entry in self.train if entry.class_id == class_id]


def stack_labels(
    samples: tuple[LabeledSample, ...] | list[LabeledSample]
) -> NP_xi8:
    return np.array([sample.class_id for sample in samples], dtype=np.int64)
