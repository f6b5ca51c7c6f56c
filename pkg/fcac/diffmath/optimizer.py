from __future__ import annotations


from typing import (
    Mapping,
    Never,
    Self
)

import attrs
import numpy as np

from ..constants.validators import positive
from ..exceptions import (
    ConfigError,
    ShapeMismatch
)


@attrs.frozen(kw_only=True)
class OptimizerConfig:
    learning_rate: float = attrs.field(default=0.1, validator=positive)
    momentum: float = 0.9
    max_grad_norm: float | None = attrs.field(default=None, validator=positive)  # None: no clipping.

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")


@attrs.frozen(kw_only=True, eq=False)
class OptimizerState:
    learning_rate: float
    momentum: float
    velocity: Mapping[str, np.ndarray]


class Optimizer:
    __slots__ = ()

    def __new__(
        cls: type[Self]
    ) -> Never:
        raise TypeError

    @classmethod
    def initial_state(
        cls: type[Self],
        params: Mapping[str, np.ndarray],
        cfg: OptimizerConfig
    ) -> OptimizerState:
        return OptimizerState(
            learning_rate=cfg.learning_rate,
            momentum=cfg.momentum,
            velocity={name: np.zeros_like(value, dtype=np.float64) for name, value in params.items()}
        )

    @classmethod
    def clip_grad_norm(
        cls: type[Self],
        grads: Mapping[str, np.ndarray],
        max_norm: float | None
    ) -> dict[str, np.ndarray]:
        # Rescales all gradients jointly so their global L2 norm is at most `max_norm`.
        if max_norm is None:
            return dict(grads)
        total = float(np.sqrt(sum(float(np.sum(grad * grad)) for grad in grads.values())))
        if total <= max_norm:
            return dict(grads)
        factor = max_norm / total
        return {name: grad * factor for name, grad in grads.items()}

    @classmethod
    def sgd_step(
        cls: type[Self],
        params: Mapping[str, np.ndarray],
        grads: Mapping[str, np.ndarray],
        state: OptimizerState
    ) -> tuple[dict[str, np.ndarray], OptimizerState]:
        """
        Classical momentum: `v <- momentum * v + grad`, then `p <- p - lr * v`.

        Parameters without a gradient entry keep their value and velocity.
        """
        new_params: dict[str, np.ndarray] = {}
        new_velocity: dict[str, np.ndarray] = {}
        for name, param in params.items():
            velocity = state.velocity.get(name)
            if velocity is None or velocity.shape != param.shape:
                raise ShapeMismatch(f"sgd#{name}", f"velocity of '{name}' does not match parameter shape {param.shape}")
            if (grad := grads.get(name)) is None:
                new_params[name] = param
                new_velocity[name] = velocity
                continue
            if grad.shape != param.shape:
                raise ShapeMismatch(f"sgd#{name}", f"gradient of '{name}' has shape {grad.shape}, parameter {param.shape}")
            velocity = state.momentum * velocity + grad
            new_params[name] = param - state.learning_rate * velocity
            new_velocity[name] = velocity
        return new_params, attrs.evolve(state, velocity=new_velocity)
