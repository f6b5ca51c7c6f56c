from __future__ import annotations


from typing import (
    Literal,
    Self
)

import attrs

from ..constants.validators import (
    nonnegative,
    one_of,
    positive,
    unit_interval
)
from ..diffmath.optimizer import OptimizerConfig
from ..exceptions import ConfigError
from ..losses.loss_config import LossConfig


@attrs.frozen(kw_only=True)
class ProtocolConfig:
    n_base_classes: int = attrs.field(default=6, validator=positive)
    n_sessions: int = attrs.field(default=2, validator=nonnegative)
    n_way: int = attrs.field(default=2, validator=positive)
    n_shot: int = attrs.field(default=5, validator=positive)
    base_epochs: int = attrs.field(default=200, validator=nonnegative)
    classifier_epochs: int = attrs.field(default=100, validator=nonnegative)
    incremental_epochs: int = attrs.field(default=200, validator=nonnegative)
    batch_size: int = attrs.field(default=64, validator=positive)
    base_mode: Literal["joint", "two_stage"] = attrs.field(default="joint", validator=one_of("joint", "two_stage"))
    sigma_init: float = attrs.field(default=0.1, validator=nonnegative)
    # False replaces the sampled weights by their means throughout training.
    stochastic: bool = True
    eval_fraction: float = attrs.field(default=0.2, validator=unit_interval)
    seed: int = attrs.field(default=0, validator=nonnegative)
    loss: LossConfig = attrs.field(factory=LossConfig)
    optimizer: OptimizerConfig = attrs.field(factory=OptimizerConfig)

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.batch_size < 2 * self.n_way:
            raise ConfigError(f"batch_size {self.batch_size} must be at least 2 * n_way = {2 * self.n_way}")
        if self.batch_size < 4:
            raise ConfigError(f"batch_size {self.batch_size} cannot hold two samples of two classes")

    @property
    def n_classes_required(
        self: Self
    ) -> int:
        return self.n_base_classes + self.n_way * self.n_sessions
