from __future__ import annotations


from abc import (
    ABC,
    abstractmethod
)
from contextlib import (
    AbstractContextManager,
    contextmanager
)
from types import TracebackType
from typing import (
    ClassVar,
    Iterator,
    Self
)

from ..exceptions import FcacError


class ToplevelResource(ABC):
    """
    A process-wide resource entered with `with`.

    Subclasses describe setup and teardown in `__contextmanager__`. At most
    one instance of each resource class is active at a time.
    """

    __slots__ = ()

    _active: ClassVar[dict[type[ToplevelResource], AbstractContextManager[None]]] = {}

    @abstractmethod
    def __contextmanager__(
        self: Self
    ) -> Iterator[None]:
        pass

    def __enter__(
        self: Self
    ) -> None:
        cls = type(self)
        if cls in ToplevelResource._active:
            raise FcacError(f"A {cls.__name__} is already active")
        context_manager = contextmanager(self.__contextmanager__)()
        ToplevelResource._active[cls] = context_manager
        return context_manager.__enter__()

    def __exit__(
        self: Self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        exc_traceback: TracebackType | None
    ) -> bool | None:
        context_manager = ToplevelResource._active.pop(type(self))
        return context_manager.__exit__(exc_type, exc_value, exc_traceback)
