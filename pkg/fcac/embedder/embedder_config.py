from __future__ import annotations


from typing import Self

import attrs

from ..constants.constants import DEFAULT_N_MELS
from ..constants.validators import (
    nonempty_positive_ints,
    positive
)
from ..exceptions import ConfigError


@attrs.frozen(kw_only=True)
class EmbedderConfig:
    n_mels: int = attrs.field(default=DEFAULT_N_MELS, validator=positive)
    embedding_dim: int = attrs.field(default=64, validator=positive)
    channels: tuple[int, ...] = attrs.field(default=(16, 32), converter=tuple, validator=nonempty_positive_ints)
    blocks_per_stage: tuple[int, ...] = attrs.field(default=(2, 2), converter=tuple, validator=nonempty_positive_ints)
    projection_dim: int = attrs.field(default=32, validator=positive)
    standardize_eps: float = attrs.field(default=1e-5, validator=positive)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if len(self.channels) != len(self.blocks_per_stage):
            raise ConfigError(
                f"channels {self.channels} and blocks_per_stage {self.blocks_per_stage} must have equal length"
            )

    @property
    def pooled_mels(
        self: Self
    ) -> int:
        # Every stage after the first halves the mel axis (rounding up).
        n_mels = self.n_mels
        for _ in self.channels[1:]:
            n_mels = (n_mels + 1) // 2
        return n_mels

    def to_dict(
        self: Self
    ) -> dict[str, object]:
        return attrs.asdict(self)
