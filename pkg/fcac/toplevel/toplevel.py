from __future__ import annotations


from typing import (
    TYPE_CHECKING,
    ClassVar,
    Self
)

if TYPE_CHECKING:
    from .config import RunConfig
    from .logger import Logger
    from .timer import Timer


class Toplevel:
    __slots__ = ()

    _config: ClassVar[RunConfig | None] = None
    _timer: ClassVar[Timer | None] = None
    _logger: ClassVar[Logger | None] = None

    @classmethod
    def _get_config(
        cls: type[Self]
    ) -> RunConfig:
        assert (config := cls._config) is not None
        return config

    # Library code reports through these two; outside a run context they are silent.

    @classmethod
    def log(
        cls: type[Self],
        message: str
    ) -> None:
        if (logger := cls._logger) is not None:
            logger.log(message)

    @classmethod
    def set_status(
        cls: type[Self],
        key: str,
        value: object
    ) -> None:
        if (logger := cls._logger) is not None:
            logger.set_status(key, value)
