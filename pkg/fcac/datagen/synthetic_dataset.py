from __future__ import annotations


import pathlib
from typing import Self

import attrs
import yaml

from ..constants.constants import DEFAULT_SAMPLE_RATE
from ..constants.validators import (
    nonnegative,
    positive
)
from ..exceptions import (
    ConfigError,
    IoError
)


@attrs.frozen(kw_only=True)
class SyntheticDataset:
    """
    Description of a reproducible synthetic corpus; `(seed, fields)` fixes every sample.
    """

    seed: int = 0
    n_classes: int = attrs.field(default=10, validator=positive)
    train_clips_per_class: int = attrs.field(default=20, validator=positive)
    eval_clips_per_class: int = attrs.field(default=10, validator=positive)
    duration_s: float = attrs.field(default=1.0, validator=positive)
    sample_rate: int = attrs.field(default=DEFAULT_SAMPLE_RATE, validator=positive)
    noise_level: float = attrs.field(default=0.05, validator=nonnegative)
    pitch_jitter: float = attrs.field(default=0.005, validator=nonnegative)
    amplitude_jitter: float = attrs.field(default=0.1, validator=nonnegative)
    spacing: float = 0.05
    max_harmonics: int = attrs.field(default=6, validator=positive)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.spacing < 0.05:
            raise ConfigError(f"Fundamental spacing must be at least 5%, got {self.spacing}")

    def to_dict(
        self: Self
    ) -> dict[str, object]:
        return attrs.asdict(self)

    @classmethod
    def from_dict(
        cls: type[Self],
        data: dict[str, object]
    ) -> Self:
        unknown = set(data) - set(attrs.fields_dict(cls))
        if unknown:
            raise ConfigError(f"Unknown synthetic dataset fields: {", ".join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as error:
            raise ConfigError(f"Invalid synthetic dataset description: {error}") from error

    @classmethod
    def read(
        cls: type[Self],
        path: pathlib.Path
    ) -> Self:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot read synthetic dataset description '{path}': {error}") from error
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as error:
            raise ConfigError(f"Malformed synthetic dataset description '{path}': {error}") from error
        if not isinstance(data, dict):
            raise ConfigError(f"Synthetic dataset description '{path}' must be a mapping")
        return cls.from_dict(data)

    def write(
        self: Self,
        path: pathlib.Path
    ) -> None:
        try:
            path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=True), encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot write synthetic dataset description '{path}': {error}") from error
