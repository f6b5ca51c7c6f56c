from __future__ import annotations


from typing import Callable

import attrs

from ..exceptions import ConfigError


type ValidatorType = Callable[[object, attrs.Attribute, object], None]


def positive(
    instance: object,
    attribute: attrs.Attribute,
    value: float | None
) -> None:
    if value is not None and value <= 0:
        raise ConfigError(f"{attribute.name} must be positive, got {value}")


def nonnegative(
    instance: object,
    attribute: attrs.Attribute,
    value: float
) -> None:
    if value < 0:
        raise ConfigError(f"{attribute.name} must be nonnegative, got {value}")


def unit_interval(
    instance: object,
    attribute: attrs.Attribute,
    value: float
) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{attribute.name} must lie in [0, 1], got {value}")


def one_of(
    *choices: str
) -> ValidatorType:

    def validator(
        instance: object,
        attribute: attrs.Attribute,
        value: object
    ) -> None:
        if value not in choices:
            raise ConfigError(f"{attribute.name} must be one of {", ".join(choices)}, got {value!r}")

    return validator


def nonempty_positive_ints(
    instance: object,
    attribute: attrs.Attribute,
    value: tuple[int, ...]
) -> None:
    if not value or any(item <= 0 for item in value):
        raise ConfigError(f"{attribute.name} must be a non-empty list of positive integers, got {value}")
