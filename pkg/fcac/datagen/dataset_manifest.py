from __future__ import annotations


import pathlib
from typing import (
    Literal,
    Self
)

import attrs

from ..constants.custom_typing import ClassIdType
from .synthetic_dataset import SyntheticDataset


type SplitType = Literal["train", "eval"]


@attrs.frozen(kw_only=True)
class ManifestEntry:
    # `source` is a path relative to the manifest, or `sig:<class_id>/<clip_index>`.
    source: str
    class_id: ClassIdType
    split: SplitType | None = None

    @property
    def is_synthetic(
        self: Self
    ) -> bool:
        return self.source.startswith("sig:")

    @property
    def clip_id(
        self: Self
    ) -> str:
        return self.source


@attrs.frozen(kw_only=True)
class DatasetManifest:
    """
    Labeled clip sources of one corpus.

    Class ids are contiguous from 0; `class_mapping` records the original id
    of each contiguous id when the source file used sparse ids.
    """

    entries: tuple[ManifestEntry, ...] = attrs.field(converter=tuple)
    sample_rate: int
    version: int = 1
    class_mapping: dict[ClassIdType, ClassIdType] = attrs.field(factory=dict)
    synthetic: SyntheticDataset | None = None
    synthetic_path: str | None = None
    root: pathlib.Path = attrs.field(factory=pathlib.Path)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        class_ids = {entry.class_id for entry in self.entries}
        assert class_ids == set(range(len(class_ids)))

    @property
    def n_classes(
        self: Self
    ) -> int:
        return len({entry.class_id for entry in self.entries})

    def entries_of(
        self: Self,
        class_id: ClassIdType,
        split: SplitType | None = None
    ) -> list[ManifestEntry]:
        return [
            entry for entry in self.entries
            if entry.class_id == class_id and (split is None or entry.split == split)
        ]
