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
from ..exceptions import ConfigError


@attrs.frozen(kw_only=True)
class LossConfig:
    tau: float = attrs.field(default=0.07, validator=positive)
    lambda_: float = attrs.field(default=0.2, validator=nonnegative)
    beta: float = attrs.field(default=1.0, validator=nonnegative)
    alpha: float = attrs.field(default=0.5, validator=unit_interval)
    # Softmax scale over cosines; 1.0 gives the unscaled objectives.
    scale: float = attrs.field(default=16.0, validator=positive)
    # `paired`: the denominator sums exp(s*cos(p_h, w_h)) over all columns h.
    # `cross`: it sums exp(s*cos(p_c, w_h)), a softmax of the old prototype over all columns.
    prototype_denominator: Literal["paired", "cross"] = attrs.field(
        default="paired",
        validator=one_of("paired", "cross")
    )

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.lambda_ == 0.0 and self.beta == 0.0:
            raise ConfigError("lambda_ and beta cannot both be zero")
